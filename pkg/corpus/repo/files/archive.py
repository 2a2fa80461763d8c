"""Archived document access."""

import os

STORAGE = "/srv/archive"


def read_archive(request):
    name = request.args["name"]
    safe_name = os.path.basename(name)
    with open(os.path.join(STORAGE, safe_name)) as fh:
        return fh.read()
