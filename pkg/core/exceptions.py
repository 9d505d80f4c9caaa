from BSonata.exceptions import BSonataError


class InvalidSchedule(BSonataError):
    """Step-size parameters outside 0 < gamma <= 1, 0 <= mu * gamma < 1."""
