"""Minimal HTML sanitizer used by the rendering layer."""

import html


def sanitize_html(text):
    return html.escape(text, quote=True)


def strip_tags(text):
    out = []
    in_tag = False
    for ch in text:
        if ch == "<":
            in_tag = True
        elif ch == ">":
            in_tag = False
        elif not in_tag:
            out.append(ch)
    return "".join(out)
