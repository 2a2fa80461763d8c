"""Order listing endpoint."""

from db.query_builder import build_filter


def list_orders(request, db):
    status = request.args["status"]
    clause = build_filter("status", status)
    return db.execute("SELECT * FROM orders WHERE " + clause).fetchall()
