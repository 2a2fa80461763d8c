"""HTTP handlers for the document area."""

from framework import request, send_bytes
from src.utlils.file_ops import download_file


def handle_download():
    file_path = request.args.get("file_path")
    data = download_file(file_path)
    return send_bytes(data, mimetype="application/octet-stream")


def handle_list():
    return send_bytes(b"readme.txt\nreport.csv\n", mimetype="text/plain")
