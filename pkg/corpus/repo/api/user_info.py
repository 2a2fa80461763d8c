"""User lookup endpoint."""


def get_user(request, db):
    user_id = request.args["user_id"]
    uid = int(user_id)
    cur = db.execute("SELECT id, name, email FROM users WHERE id = %s" % uid)
    return cur.fetchone()
