"""Integration fixtures only; rotated fake credentials."""

TEST_API_KEY = "test-0000-fake-key"


def client():
    from sdk import Client

    return Client(key=TEST_API_KEY)
