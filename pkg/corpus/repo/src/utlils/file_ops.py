"""Shared file helpers."""

ROOT_DIR = "/srv/app/files"


def download_file(path):
    full_path = ROOT_DIR + "/" + path
    with open(full_path, "rb") as fh:
        return fh.read()


def store_file(name, data):
    with open(ROOT_DIR + "/" + name, "wb") as fh:
        fh.write(data)
