"""
Surrogate conventions for the block subproblems.

``plain_linearization`` keeps ``tau||u - x||^2`` and the whole (convex)
regularizer. ``dc_linearization`` keeps ``(tau/2)||u - x||^2`` and the l1
part of the regularizer, and linearizes its concave part.
"""
from dataclasses import dataclass

PLAIN_LINEARIZATION = 'plain_linearization'
DC_LINEARIZATION = 'dc_linearization'

SURROGATE_CHOICES = (
    (PLAIN_LINEARIZATION, 'linearized loss, tau||.||^2 proximal term'),
    (DC_LINEARIZATION, 'linearized loss and concave penalty part, (tau/2)||.||^2 proximal term'),
)


@dataclass(frozen=True)
class SurrogateSpec:
    tau: float | tuple = 10.0
    kind: str = DC_LINEARIZATION
    use_oracle: bool = False

    def __post_init__(self):
        taus = self.tau if isinstance(self.tau, tuple) else (self.tau,)
        if not taus or min(taus) <= 0:
            raise ValueError('tau must be positive')
        if self.kind not in dict(SURROGATE_CHOICES):
            raise ValueError(f'unknown surrogate kind {self.kind!r}')

    def tau_for(self, agent):
        """Per-agent tau when a tuple was given, else the shared value."""
        if isinstance(self.tau, tuple):
            return self.tau[agent]
        return self.tau

    def modulus(self, agent):
        """Strong-convexity modulus of the surrogate's quadratic."""
        if self.kind == PLAIN_LINEARIZATION:
            return 2.0 * self.tau_for(agent)
        return self.tau_for(agent)

    def coefficient(self, n_y, concave_gradient):
        """Linear term of the subproblem at its centre."""
        if self.kind == PLAIN_LINEARIZATION:
            return n_y
        return n_y - concave_gradient

    def supports(self, problem):
        """Plain linearization keeps the regularizer whole, so it must be convex."""
        return self.kind == DC_LINEARIZATION or problem.is_convex
