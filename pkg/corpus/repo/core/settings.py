"""Partner integration settings."""

from auth import decrypt_config

API_BLOB = "aGlnaGx5LXNlY3JldC1wYXJ0bmVyLWtleQ=="


def partner_key():
    return decrypt_config(API_BLOB)
