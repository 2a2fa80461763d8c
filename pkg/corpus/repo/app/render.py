"""Comment rendering."""

from utils.sanitizer import sanitize_html


def render_comment(request):
    comment = request.form["comment"]
    safe = sanitize_html(comment)
    return "<div class='comment'>" + safe + "</div>"
