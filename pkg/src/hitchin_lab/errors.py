"""Exception types shared across the package.

Every domain error carries a short machine-readable ``code`` which the CLI
reports as ``{"error": code, "detail": ...}`` on stderr.
"""


class HitchinLabError(Exception):
    code = "error"

    def __init__(self, detail="", **context):
        super().__init__(detail)
        self.detail = detail
        self.context = context


class InvalidModulus(HitchinLabError, ValueError):
    code = "invalid_modulus"


class NonConvergent(HitchinLabError):
    code = "non_convergent"


class PoleAtLattice(HitchinLabError):
    code = "pole_at_lattice"


class DegenerateSample(HitchinLabError):
    code = "degenerate_sample"


class InvalidSchottkyGroup(HitchinLabError, ValueError):
    code = "invalid_schottky_group"


class InvalidPhasePoint(HitchinLabError, ValueError):
    code = "invalid_phase_point"


class GradientUnavailable(HitchinLabError):
    code = "gradient_unavailable"


class SingularS(HitchinLabError):
    code = "singular_s"


class SpectralPole(HitchinLabError):
    code = "spectral_pole"


class CollidingPositions(HitchinLabError):
    code = "colliding_positions"


class ContourThroughPole(HitchinLabError):
    code = "contour_through_pole"


class Resonance(HitchinLabError):
    code = "resonance"


class StepCollision(HitchinLabError):
    code = "step_collision"


class NoConvergence(HitchinLabError):
    code = "no_convergence"


class SpectralCollision(HitchinLabError):
    code = "spectral_collision"


class InvalidConfig(HitchinLabError, ValueError):
    code = "invalid_config"
