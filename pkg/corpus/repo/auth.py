"""Config decryption helpers."""

import base64


def decrypt_config(blob):
    return base64.b64decode(blob).decode("utf-8")
