"""
Duplication-aware token reduction (pivot tokens, duplicate scores, budgeted retention).
"""
