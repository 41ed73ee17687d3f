from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from .errors import ConfigError


@dataclass(frozen=True)
class SolverConfig:
    """Iteration limits and tolerances shared by the eigen and solver modules.

    ``tol_grad`` is measured in the stiffness-dual norm of the gradient of the
    (scale-free) log objective, so it does not depend on the size of ``u``.
    """

    max_iters: int = 4000
    tol_energy: float = 1e-9
    tol_grad: float = 1e-8
    armijo_c1: float = 1e-4
    armijo_shrink: float = 0.5
    memory: int = 12
    restarts: int = 3
    seed: int = 0
    peak_search: bool = True
    jobs: int = 1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        for name in ("tol_energy", "tol_grad"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not (0 < self.armijo_c1 < 1 and 0 < self.armijo_shrink < 1):
            raise ConfigError("armijo parameters must lie in (0, 1)")
        if self.restarts < 1 or self.jobs < 1 or self.memory < 1:
            raise ConfigError("restarts, jobs and memory must be >= 1")

    def replace(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        return asdict(self)

    def lbfgs_kwargs(self):
        return dict(
            max_iters=self.max_iters,
            tol_grad=self.tol_grad,
            tol_f=self.tol_energy,
            c1=self.armijo_c1,
            shrink=self.armijo_shrink,
            memory=self.memory,
        )
