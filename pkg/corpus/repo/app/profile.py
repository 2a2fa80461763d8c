"""Profile page rendering."""


def show_profile(request):
    bio = request.form["bio"]
    return "<section class='bio'>" + bio + "</section>"
