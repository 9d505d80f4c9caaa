from BSonata.exceptions import BSonataError


class ConfigError(BSonataError):
    """A run configuration failed validation; ``errors`` is the serializer error dict."""

    def __init__(self, errors, source=None):
        self.errors = errors
        self.source = source
        where = f' in {source}' if source else ''
        super().__init__(f'invalid run configuration{where}: {errors}')


class DivergenceDetected(BSonataError):
    """A metrics record held a NaN or an infinity."""

    def __init__(self, t, record=None):
        self.t = t
        self.record = record
        super().__init__(f'non-finite metrics at round {t}')


class InvariantViolation(BSonataError):
    """A per-round check failed in verify mode."""

    def __init__(self, name, t, detail=''):
        self.name = name
        self.t = t
        self.detail = detail
        super().__init__(f'{name} violated at round {t}: {detail}')
