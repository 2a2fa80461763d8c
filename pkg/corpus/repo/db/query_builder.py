"""Ad-hoc SQL fragment helpers."""


def build_filter(column, value):
    return "%s = '%s'" % (column, value)


def build_in_clause(column, values):
    quoted = ", ".join("'%s'" % v for v in values)
    return "%s IN (%s)" % (column, quoted)
