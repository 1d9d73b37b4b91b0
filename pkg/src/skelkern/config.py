"""Flat ``key = value`` run configuration.

One key per line, ``#`` starts a comment.  Unknown keys are rejected.
List values are comma separated.  Every key has a default, see
:data:`DEFAULTS`; descriptor defaults are the values selected by
cross-validation on Florence3D.
"""

from dataclasses import dataclass, field, replace

from .errors import ConfigError

__all__ = ["RunConfig", "DEFAULTS", "read_config", "parse_config", "DOCS"]


def _floats(s):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s):
    return tuple(int(x) for x in s.split(",") if x.strip())


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s):
    return None if s.strip().lower() in ("", "auto", "none") else float(s)


def _str(s):
    return s.strip()


# key: (parser, default, doc)
_SCHEMA = {
    "dataset": (_str, "", "dataset file, directory or CSV manifest"),
    "format": (_str, "skt1", "skt1 or msr-txt"),
    "descriptors": (_str, "", "manifest from 'extract'; train-eval then skips extraction"),
    "topology": (_str, "", "bundled topology name or topology file; empty disables limb normalization"),
    "hip": (int, 1, "joint id used as the root for centring"),
    "normalize_limbs": (_bool, True, "rescale segments to mean training lengths"),
    "split": (_str, "cross-subject", "cross-subject or subset-average"),
    "train_subjects": (_ints, (), "training subject ids; empty means odd ids"),
    "test_subjects": (_ints, (), "test subject ids; empty means all others"),
    "subsets": (_str, "msr", "class subsets for subset-average: 'msr' or a file"),
    "kind": (_str, "sck", "sck, dck or both"),
    "sck_sigma2": (float, 0.6, "position bandwidth"),
    "sck_sigma3": (float, 0.5, "temporal bandwidth"),
    "sck_z2": (int, 5, "position pivots per coordinate"),
    "sck_z3": (int, 6, "temporal pivots"),
    "sck_beta1": (float, 0.5, "position weight (beta2 = 1 - beta1)"),
    "sck_gamma": (float, 0.36, "slice power"),
    "sck_normalizer": (_str, "frames", "frames or none"),
    "dck_sigma2": (float, 0.6, "displacement bandwidth"),
    "dck_sigma3": (float, 0.5, "temporal bandwidth"),
    "dck_sigma4": (_opt_float, None, "frame-gap bandwidth in frames; auto = M/4"),
    "dck_z2": (int, 5, "displacement pivots per coordinate"),
    "dck_z3": (int, 6, "temporal pivots"),
    "dck_gamma": (float, 0.85, "HOSVD core power"),
    "dck_gamma_star": (float, 1.0, "elementwise power after reconstruction"),
    "dck_pair_mode": (_str, "paper-size", "paper-size or strict"),
    "dck_normalizer": (_str, "frames", "frames (1/(J*M)) or none"),
    "joint_subset": (_str, "", "A..I, comma-separated ids, or empty for all joints"),
    "c_grid": (_floats, (0.1, 1.0, 10.0, 100.0), "SVM C values tried on validation"),
    "tol": (float, 1e-6, "relative duality gap"),
    "seed": (int, 0, "random seed"),
    "out": (_str, "out", "output directory"),
    "workers": (int, 1, "extraction processes"),
    "synth_k": (int, 5, "synthetic classes"),
    "synth_per_class": (int, 20, "synthetic sequences per class"),
    "synth_j": (int, 8, "synthetic joints"),
    "synth_m": (int, 30, "synthetic frames"),
    "synth_noise": (float, 0.05, "synthetic noise std"),
    "synth_subjects": (int, 10, "synthetic subjects"),
    "synth_bursts": (int, 0, "max repeats of a bursty window; 0 disables"),
    "grid_sck_gamma": (_floats, (), "gridsearch values for sck_gamma"),
    "grid_sck_sigma2": (_floats, (), "gridsearch values for sck_sigma2"),
    "grid_sck_sigma3": (_floats, (), "gridsearch values for sck_sigma3"),
    "grid_sck_z2": (_ints, (), "gridsearch values for sck_z2"),
    "grid_sck_z3": (_ints, (), "gridsearch values for sck_z3"),
    "grid_dck_gamma": (_floats, (), "gridsearch values for dck_gamma"),
    "grid_dck_sigma2": (_floats, (), "gridsearch values for dck_sigma2"),
    "grid_dck_sigma3": (_floats, (), "gridsearch values for dck_sigma3"),
    "grid_joint_subset": (lambda s: tuple(x.strip() for x in s.split(";") if x.strip()), (),
                          "gridsearch joint subsets, separated by ';'"),
    "bench_t": (int, 10, "sequences per benchmark Gram matrix"),
    "bench_n": (_ints, (8, 16, 32), "frame counts swept by the benchmark"),
    "bench_j": (int, 4, "joints per benchmark sequence"),
    "bench_reps": (int, 5, "repetitions; medians are reported"),
}

DEFAULTS = {k: v[1] for k, v in _SCHEMA.items()}
DOCS = {k: v[2] for k, v in _SCHEMA.items()}

_CHOICES = {
    "format": ("skt1", "msr-txt"),
    "split": ("cross-subject", "subset-average"),
    "kind": ("sck", "dck", "both"),
    "sck_normalizer": ("frames", "none"),
    "dck_pair_mode": ("paper-size", "strict"),
    "dck_normalizer": ("frames", "none"),
}


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=lambda: dict(DEFAULTS))

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None

    def updated(self, **changes):
        out = dict(self.values)
        for k, v in changes.items():
            if k not in _SCHEMA:
                raise ConfigError(f"unknown config key {k!r}")
            out[k] = v
        _check(out)
        return replace(self, values=out)

    def to_text(self):
        lines = []
        for k in _SCHEMA:
            v = self.values[k]
            if isinstance(v, tuple):
                sep = ";" if k == "grid_joint_subset" else ","
                v = sep.join(map(str, v))
            elif v is None:
                v = "auto"
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


def _check(values):
    for k, choices in _CHOICES.items():
        if values[k] not in choices:
            raise ConfigError(f"{k} must be one of {choices}, got {values[k]!r}")
    if not 0.0 <= values["sck_beta1"] <= 1.0:
        raise ConfigError("sck_beta1 must lie in [0, 1]")
    if values["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    if not values["c_grid"] or min(values["c_grid"]) <= 0:
        raise ConfigError("c_grid must list positive values")


def parse_config(text, source="<config>"):
    values = dict(DEFAULTS)
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            values[key] = _SCHEMA[key][0](raw.strip())
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    _check(values)
    return RunConfig(values)


def read_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
