"""Exception types shared across the solver."""


class MomentflowError(Exception):
    """Base class for all solver errors."""


class RealizabilityError(MomentflowError):
    """A state lost positivity of density or temperature.

    Usually the symptom of a too-aggressive pseudo-time step or an
    over-relaxed level correction.  Carries location context when known.
    """

    def __init__(self, message, *, cell=None, level=None, stage=None):
        self.cell = cell
        self.level = level
        self.stage = stage
        parts = [message]
        if cell is not None:
            parts.append(f"cell={cell}")
        if level is not None:
            parts.append(f"level={level}")
        if stage is not None:
            parts.append(f"stage={stage}")
        super().__init__(" | ".join(str(p) for p in parts))

    def with_context(self, *, level=None, stage=None):
        return RealizabilityError(
            self.args[0].split(" | ")[0],
            cell=self.cell,
            level=level if level is not None else self.level,
            stage=stage if stage is not None else self.stage,
        )


class ModelBreakdownError(MomentflowError):
    """The anisotropic-Gaussian tensor lost positive definiteness."""


class ConfigError(MomentflowError):
    """Invalid run or sweep configuration."""
