"""Common exception root for the toolkit.

Every module defines its own failure types; they all derive from
QrsealError so callers can catch toolkit failures in one clause
without swallowing unrelated bugs.
"""


class QrsealError(Exception):
    pass
