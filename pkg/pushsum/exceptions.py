from BSonata.exceptions import BSonataError


class DegenerateWeight(BSonataError):
    """A push-sum weight became nonpositive; the state is corrupted."""

    def __init__(self, agent, block, value):
        self.agent = agent
        self.block = block
        self.value = value
        super().__init__(f'phi[{agent}, {block}] = {value!r} is not positive')
