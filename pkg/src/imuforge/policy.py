"""Sub-policy spaces: construction, sampling, application, adaptive weights.

A sub-policy picks, for each augmentation category, either the identity
or one (method, parameter option). In ``ppda`` mode the categories are
amplitude, speed, placement and hardware, applied to the motion model
before re-synthesis; in ``stda`` mode they are magnitude, time,
rotation and jitter, applied to the signal window directly.

A PolicyState holds the sub-policy set with sampling weights. Weights
are updated multiplicatively from rewards (exponentiated gradient) and
mixed with a uniform floor so every sub-policy keeps a minimum
sampling probability.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path

import numpy as np

from . import rng, stda
from .kinematics import stack_traces
from .ppda import (
    MotionBundle,
    amplitude_scale,
    amplitude_warp,
    hardware_perturb,
    placement_perturb,
    speed_resample,
)
from .stda import SignalWindow, make_time_warp

PPDA_CATEGORIES = ("amplitude", "speed", "placement", "hardware")
STDA_CATEGORIES = ("magnitude", "time", "rotation", "jitter")

DOCUMENT_FORMAT = "augmentation-policy"
DOCUMENT_VERSION = 1

DEFAULT_LEARNING_RATE = 0.1
DEFAULT_FLOOR = 0.05

# Parameter grids shared by both modes.
SCALE_SIGMAS = (0.1, 0.2, 0.4, 0.6)
WARP_SIGMAS = (0.2, 0.4)
WARP_KNOTS = (2, 4)
SPEED_RANGES = ((0.7, 0.9), (1.1, 1.3), (0.75, 1.5), (0.5, 2.0))
SPEED_WARP_KNOTS = (2, 4)
SPEED_WARP_RATIOS = (1.5, 2.0)
NOISE_SIGMAS = (0.05, 0.1, 0.15, 0.2)
PLACEMENT_ORIENT_RANGE_DEG = 25.0
ROTATE_RANGE_DEG = 180.0
HARDWARE_BIAS_RANGE = 1.0


class PolicyError(ValueError):
    """Invalid policy configuration or sub-policy."""


@dataclass(frozen=True)
class SubPolicy:
    """One augmentation choice per category; missing category = identity."""

    mode: str  # "ppda" | "stda"
    choices: tuple[tuple[str, str, int], ...] = ()  # (category, method, option index)

    def __post_init__(self):
        if self.mode not in ("ppda", "stda"):
            raise PolicyError(f"unknown mode {self.mode!r}")
        valid = PPDA_CATEGORIES if self.mode == "ppda" else STDA_CATEGORIES
        seen = set()
        for category, method, option in self.choices:
            if category not in valid:
                raise PolicyError(f"unknown category {category!r} for mode {self.mode!r}")
            if category in seen:
                raise PolicyError(f"category {category!r} chosen twice")
            if option < 0:
                raise PolicyError("option index must be >= 0")
            seen.add(category)

    @property
    def is_identity(self) -> bool:
        return not self.choices

    def choice_for(self, category: str) -> tuple[str, int] | None:
        for cat, method, option in self.choices:
            if cat == category:
                return method, option
        return None

    def describe(self) -> str:
        if self.is_identity:
            return "identity"
        return "+".join(f"{c}.{m}[{o}]" for c, m, o in self.choices)


@dataclass
class MethodConfig:
    name: str
    options: list[dict]

    def __post_init__(self):
        if not self.options:
            raise PolicyError(f"method {self.name!r} has no parameter options")


@dataclass
class CategoryConfig:
    name: str
    methods: list[MethodConfig]

    def option_count(self) -> int:
        """Identity plus every (method, option) pair."""
        return 1 + sum(len(m.options) for m in self.methods)


@dataclass
class PolicyConfig:
    """Parsed policy configuration document."""

    mode: str
    kind: str  # "combinatorial" | "binary"
    categories: list[CategoryConfig]
    learning_rate: float = DEFAULT_LEARNING_RATE
    floor: float = DEFAULT_FLOOR
    binary_choice: tuple[str, str, int] | None = None  # for kind == "binary"

    def __post_init__(self):
        expected = PPDA_CATEGORIES if self.mode == "ppda" else STDA_CATEGORIES
        names = tuple(c.name for c in self.categories)
        if names != expected:
            raise PolicyError(f"mode {self.mode!r} requires categories {expected}, got {names}")
        if self.kind not in ("combinatorial", "binary"):
            raise PolicyError(f"unknown policy kind {self.kind!r}")
        if self.kind == "binary" and self.binary_choice is None:
            raise PolicyError("binary policy requires an augmentation choice")
        if self.learning_rate <= 0:
            raise PolicyError("learning_rate must be positive")
        if not 0.0 <= self.floor < 1.0:
            raise PolicyError("floor must be in [0, 1)")

    def category(self, name: str) -> CategoryConfig:
        for c in self.categories:
            if c.name == name:
                return c
        raise PolicyError(f"no category named {name!r}")

    def option_params(self, category: str, method: str, option: int) -> dict:
        for m in self.category(category).methods:
            if m.name == method:
                if not 0 <= option < len(m.options):
                    raise PolicyError(
                        f"option index {option} out of range for {category}.{method}"
                    )
                return m.options[option]
        raise PolicyError(f"no method {method!r} in category {category!r}")


@dataclass
class PolicyState:
    """Sub-policy set plus adaptive sampling weights."""

    config: PolicyConfig
    subpolicies: list[SubPolicy]
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not self.subpolicies:
            raise PolicyError("empty sub-policy set")
        if self.weights is None:
            self.weights = np.ones(len(self.subpolicies))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (len(self.subpolicies),):
            raise PolicyError("weights length does not match sub-policy count")
        if np.any(self.weights <= 0) or not np.all(np.isfinite(self.weights)):
            raise PolicyError("weights must be positive and finite")

    def __len__(self) -> int:
        return len(self.subpolicies)

    @property
    def probabilities(self) -> np.ndarray:
        """Floor-mixed sampling distribution; always sums to 1."""
        k = len(self.weights)
        eps = self.config.floor
        base = self.weights / self.weights.sum()
        return (1.0 - eps) * base + eps / k


def default_config(
    mode: str,
    kind: str = "combinatorial",
    binary_choice: tuple[str, str, int] | None = None,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    floor: float = DEFAULT_FLOOR,
) -> PolicyConfig:
    """Stock configuration with the full parameter grids for either mode."""
    warp_opts = [{"sigma": s, "knots": k} for s in WARP_SIGMAS for k in WARP_KNOTS]
    speed_scale_opts = [{"low": lo, "high": hi} for lo, hi in SPEED_RANGES]
    speed_warp_opts = [
        {"knots": k, "max_speed_ratio": r} for k in SPEED_WARP_KNOTS for r in SPEED_WARP_RATIOS
    ]
    if mode == "ppda":
        categories = [
            CategoryConfig(
                "amplitude",
                [
                    MethodConfig("scale", [{"sigma": s} for s in SCALE_SIGMAS]),
                    MethodConfig("warp", warp_opts),
                ],
            ),
            CategoryConfig(
                "speed",
                [
                    MethodConfig("scale", speed_scale_opts),
                    MethodConfig("warp", speed_warp_opts),
                ],
            ),
            CategoryConfig(
                "placement",
                [MethodConfig("perturb", [{"orient_range_deg": PLACEMENT_ORIENT_RANGE_DEG}])],
            ),
            CategoryConfig(
                "hardware",
                [
                    MethodConfig(
                        "perturb",
                        [
                            {"sigma": s, "bias_range": HARDWARE_BIAS_RANGE}
                            for s in NOISE_SIGMAS
                        ],
                    )
                ],
            ),
        ]
    elif mode == "stda":
        categories = [
            CategoryConfig(
                "magnitude",
                [
                    MethodConfig("scale", [{"sigma": s} for s in SCALE_SIGMAS]),
                    MethodConfig("warp", warp_opts),
                ],
            ),
            CategoryConfig(
                "time",
                [
                    MethodConfig("scale", speed_scale_opts),
                    MethodConfig("warp", speed_warp_opts),
                ],
            ),
            CategoryConfig(
                "rotation",
                [MethodConfig("random", [{"range_deg": ROTATE_RANGE_DEG}])],
            ),
            CategoryConfig(
                "jitter",
                [MethodConfig("add", [{"sigma": s} for s in NOISE_SIGMAS])],
            ),
        ]
    else:
        raise PolicyError(f"unknown mode {mode!r}")
    return PolicyConfig(
        mode=mode,
        kind=kind,
        categories=categories,
        learning_rate=learning_rate,
        floor=floor,
        binary_choice=binary_choice,
    )


def build_binary(config: PolicyConfig) -> PolicyState:
    """Two sub-policies, identity and one augmentation, each at p = 0.5."""
    if config.binary_choice is None:
        raise PolicyError("binary policy requires an augmentation choice")
    category, method, option = config.binary_choice
    config.option_params(category, method, option)  # validates
    aug = SubPolicy(mode=config.mode, choices=((category, method, option),))
    if aug.is_identity:
        raise PolicyError("binary augmentation must not be the identity")
    identity = SubPolicy(mode=config.mode)
    return PolicyState(config=config, subpolicies=[identity, aug], weights=np.ones(2))


def build_combinatorial(config: PolicyConfig) -> PolicyState:
    """Cartesian product over categories with uniform initial probabilities.

    Per category the choices are: identity first, then each method's
    options in configured order.
    """
    per_category: list[list[tuple[str, str, int] | None]] = []
    for cat in config.categories:
        choices: list[tuple[str, str, int] | None] = [None]
        for method in cat.methods:
            choices.extend((cat.name, method.name, i) for i in range(len(method.options)))
        per_category.append(choices)
    subpolicies = [
        SubPolicy(mode=config.mode, choices=tuple(c for c in combo if c is not None))
        for combo in product(*per_category)
    ]
    return PolicyState(config=config, subpolicies=subpolicies)


def build(config: PolicyConfig) -> PolicyState:
    if config.kind == "binary":
        return build_binary(config)
    return build_combinatorial(config)


def sample(state: PolicyState, seed: int, n: int | None = None):
    """Categorical draw(s) of sub-policy indices under the current weights."""
    gen = rng.stream(seed, "policy-sample")
    p = state.probabilities
    if n is None:
        return int(gen.choice(len(state), p=p))
    return gen.choice(len(state), size=n, p=p)


def update_weights(state: PolicyState, rewards: list[tuple[int, float]]) -> PolicyState:
    """Multiplicative update from (sub-policy index, reward) observations.

    Each reported index i gets w_i *= exp(learning_rate * mean reward);
    unreported indices keep their weight. Weights are renormalized to
    mean 1 for numeric stability; the sampling floor keeps every
    probability at or above floor / k.
    """
    if not rewards:
        return replace(state, weights=state.weights.copy())
    totals: dict[int, list[float]] = {}
    for index, reward in rewards:
        if not 0 <= index < len(state):
            raise PolicyError(f"sub-policy index {index} out of range")
        if not math.isfinite(reward):
            raise PolicyError(f"non-finite reward for sub-policy {index}")
        totals.setdefault(index, []).append(float(reward))
    weights = state.weights.copy()
    for index, values in totals.items():
        weights[index] *= math.exp(state.config.learning_rate * float(np.mean(values)))
    weights /= weights.mean()
    return replace(state, weights=weights)


def apply(
    sp: SubPolicy,
    config: PolicyConfig,
    target,
    seed: int,
    label: int | None = None,
) -> SignalWindow:
    """Apply a sub-policy and return the resulting window.

    ``target`` is a SignalWindow in stda mode, or a
    ``(MotionBundle, (start, size))`` pair in ppda mode; ppda windows
    are cut from the bundle, transformed, re-simulated and labeled
    with ``label``. The label is never altered by the augmentations.
    """
    if sp.mode == "stda":
        if not isinstance(target, SignalWindow):
            raise PolicyError("stda sub-policy needs a SignalWindow target")
        return _apply_stda(sp, config, target, seed)
    if isinstance(target, SignalWindow):
        raise PolicyError("ppda sub-policy needs a (MotionBundle, span) target")
    bundle, span = target
    return _apply_ppda(sp, config, bundle, span, seed, 0 if label is None else label)


def _apply_stda(
    sp: SubPolicy, config: PolicyConfig, window: SignalWindow, seed: int
) -> SignalWindow:
    out = window
    choice = sp.choice_for("magnitude")
    if choice:
        method, option = choice
        params = config.option_params("magnitude", method, option)
        op_seed = rng.derive_seed(seed, "magnitude")
        if method == "scale":
            out = stda.magnitude_scale(out, params["sigma"], op_seed)
        elif method == "warp":
            out = stda.magnitude_warp(out, params["sigma"], params["knots"], op_seed)
        else:
            raise PolicyError(f"unknown magnitude method {method!r}")
    choice = sp.choice_for("time")
    if choice:
        method, option = choice
        params = config.option_params("time", method, option)
        op_seed = rng.derive_seed(seed, "time")
        if method == "scale":
            beta = rng.stream(op_seed, "beta").uniform(params["low"], params["high"])
            out = stda.time_scale(out, beta)
        elif method == "warp":
            out = stda.time_warp(out, params["knots"], params["max_speed_ratio"], op_seed)
        else:
            raise PolicyError(f"unknown time method {method!r}")
    choice = sp.choice_for("rotation")
    if choice:
        method, option = choice
        params = config.option_params("rotation", method, option)
        out = stda.rotate(out, rng.derive_seed(seed, "rotation"), params["range_deg"])
    choice = sp.choice_for("jitter")
    if choice:
        method, option = choice
        params = config.option_params("jitter", method, option)
        out = stda.jitter(out, params["sigma"], rng.derive_seed(seed, "jitter"))
    return out


def _apply_ppda(
    sp: SubPolicy,
    config: PolicyConfig,
    bundle: MotionBundle,
    span: tuple[int, int],
    seed: int,
    label: int,
) -> SignalWindow:
    start, size = span
    work = bundle.restrict(start, size)
    dyn = work.dynamics.canonicalized()

    choice = sp.choice_for("amplitude")
    if choice:
        method, option = choice
        params = config.option_params("amplitude", method, option)
        op_seed = rng.derive_seed(seed, "amplitude")
        if method == "scale":
            dyn = amplitude_scale(dyn, params["sigma"], op_seed)
        elif method == "warp":
            dyn = amplitude_warp(dyn, params["sigma"], params["knots"], op_seed)
        else:
            raise PolicyError(f"unknown amplitude method {method!r}")
    choice = sp.choice_for("speed")
    if choice:
        method, option = choice
        params = config.option_params("speed", method, option)
        op_seed = rng.derive_seed(seed, "speed")
        if method == "scale":
            beta = rng.stream(op_seed, "beta").uniform(params["low"], params["high"])
            dyn = speed_resample(dyn, beta)
        elif method == "warp":
            curve = make_time_warp(
                dyn.num_samples, params["knots"], params["max_speed_ratio"], op_seed
            )
            dyn = speed_resample(dyn, curve)
        else:
            raise PolicyError(f"unknown speed method {method!r}")

    placement = work.placement
    choice = sp.choice_for("placement")
    if choice:
        method, option = choice
        params = config.option_params("placement", method, option)
        placement = placement_perturb(
            placement,
            params["orient_range_deg"],
            rng.derive_seed(seed, "placement"),
            axial_range_deg=params.get("axial_range_deg"),
            flip_axes=set(params["flip_axes"]) if params.get("flip_axes") else None,
            flip_prob=params.get("flip_prob", 0.5),
        )
    hardware = work.hardware
    choice = sp.choice_for("hardware")
    if choice:
        method, option = choice
        params = config.option_params("hardware", method, option)
        hardware = hardware_perturb(
            hardware, params["sigma"], params["bias_range"], rng.derive_seed(seed, "hardware")
        )

    work = replace(work, dynamics=dyn, placement=placement, hardware=hardware)
    traces = work.synthesize(rng.derive_seed(seed, "synthesis"))
    return SignalWindow(
        data=stack_traces(traces),
        sample_rate_hz=work.dynamics.sample_rate_hz,
        label=label,
    )


def baseline_window(
    bundle: MotionBundle, span: tuple[int, int], seed: int, label: int = 0
) -> SignalWindow:
    """Unaugmented synthesis of one window; the identity sub-policy
    reproduces this bit-exactly under the same seed."""
    mode_config = default_config("ppda")
    return _apply_ppda(SubPolicy(mode="ppda"), mode_config, bundle, span, seed, label)


# ---------------------------------------------------------------------------
# Configuration documents

def config_to_document(config: PolicyConfig) -> dict:
    doc = {
        "format": DOCUMENT_FORMAT,
        "version": DOCUMENT_VERSION,
        "mode": config.mode,
        "kind": config.kind,
        "learning_rate": config.learning_rate,
        "probability_floor": config.floor,
        "categories": [
            {
                "name": cat.name,
                "methods": [
                    {"name": m.name, "options": [dict(o) for o in m.options]}
                    for m in cat.methods
                ],
            }
            for cat in config.categories
        ],
    }
    if config.binary_choice is not None:
        category, method, option = config.binary_choice
        doc["binary"] = {"category": category, "method": method, "option": option}
    return doc


def config_from_document(doc: dict) -> PolicyConfig:
    if not isinstance(doc, dict):
        raise PolicyError("policy document must be a JSON object")
    if doc.get("format") != DOCUMENT_FORMAT:
        raise PolicyError(f"not an augmentation-policy document: format={doc.get('format')!r}")
    if doc.get("version") != DOCUMENT_VERSION:
        raise PolicyError(f"unsupported policy document version {doc.get('version')!r}")
    try:
        categories = [
            CategoryConfig(
                name=cat["name"],
                methods=[
                    MethodConfig(name=m["name"], options=list(m["options"]))
                    for m in cat["methods"]
                ],
            )
            for cat in doc["categories"]
        ]
        binary = doc.get("binary")
        binary_choice = (
            (binary["category"], binary["method"], int(binary["option"])) if binary else None
        )
        return PolicyConfig(
            mode=doc["mode"],
            kind=doc["kind"],
            categories=categories,
            learning_rate=float(doc.get("learning_rate", DEFAULT_LEARNING_RATE)),
            floor=float(doc.get("probability_floor", DEFAULT_FLOOR)),
            binary_choice=binary_choice,
        )
    except (KeyError, TypeError) as exc:
        raise PolicyError(f"malformed policy document: {exc}") from exc


def save_config(config: PolicyConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_document(config), indent=2) + "\n")


def load_config(path) -> PolicyConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise PolicyError(f"policy file is not valid JSON: {exc}") from exc
    return config_from_document(doc)


def config_digest(config: PolicyConfig) -> str:
    """Stable short hash of the configuration document."""
    import hashlib

    blob = json.dumps(config_to_document(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]
