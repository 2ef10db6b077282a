from .formats import (
    encode_tokens,
    decode_tokens,
    encode_attention,
    decode_attention,
    read_tokens,
    write_tokens,
    read_attention,
    write_attention,
    parse_csv_tokens,
    format_csv_tokens,
    load_tokens,
)

__all__ = [
    'encode_tokens', 'decode_tokens', 'encode_attention', 'decode_attention',
    'read_tokens', 'write_tokens', 'read_attention', 'write_attention',
    'parse_csv_tokens', 'format_csv_tokens', 'load_tokens',
]
