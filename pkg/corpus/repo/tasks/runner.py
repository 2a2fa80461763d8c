"""Background export task."""

import os


def run_export(request):
    fmt = request.args["format"]
    os.system("exporter --format " + fmt)
    return "started"
