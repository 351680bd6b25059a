"""Run configuration files: one document drives simulate, serve, and the UI.

The file mirrors the DesignConfig and SyntheticSpec fields one-to-one::

    design:
      alpha: 0.75
      cluster_salt: 20260815
      site1_split: 0.5
    synthetic:
      mu: {"1,0": 1.0, "2,0": 1.0, "1,3": 1.0, "1,4": 2.0, "2,3": 1.0, "2,4": 0.0}
      p_overlap: 0.5
      n_users: 10000
      n_reps: 200
      seed: 7
      noise_sd: 1.0
      covariate_dim: 0
      covariate_coeffs: []
    sweep:
      axis: delta1
      values: [-2, -1, 0, 1, 2]
    methods: [uncorrected, corrected, corrected+adj]

``delta1`` / ``delta2`` may be given instead of (or alongside) the
``"1,4"`` / ``"2,4"`` entries; when both appear they must agree. JSON and
YAML files are accepted. The run id is a digest of the canonical config,
so resubmitting the same document always addresses the same run.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .core import DesignConfig, EstimatorMethod
from .errors import ConfigError, ValidationError
from .simulator import DEFAULT_METHODS, SWEEP_AXES, SyntheticSpec

_METHOD_BY_LABEL = {m.label: m for m in EstimatorMethod}


@dataclass(frozen=True)
class RunConfig:
    design: DesignConfig
    synthetic: SyntheticSpec
    sweep_axis: str
    sweep_values: tuple[float, ...]
    methods: tuple[EstimatorMethod, ...]

    def canonical(self) -> dict:
        """Plain-data form with stable key order; input to the run id."""
        return {
            "design": {
                "alpha": self.design.alpha,
                "cluster_salt": self.design.cluster_salt,
                "site1_split": self.design.site1_split,
                "treatment_labels": list(self.design.treatment_labels),
            },
            "synthetic": {
                "mu": {f"{t},{s}": v for (t, s), v in sorted(self.synthetic.mu.items())},
                "delta1": self.synthetic.delta1,
                "delta2": self.synthetic.delta2,
                "p_overlap": self.synthetic.p_overlap,
                "n_users": self.synthetic.n_users,
                "n_reps": self.synthetic.n_reps,
                "seed": self.synthetic.seed,
                "noise_sd": self.synthetic.noise_sd,
                "covariate_dim": self.synthetic.covariate_dim,
                "covariate_coeffs": list(self.synthetic.covariate_coeffs),
                "outcome_kind": self.synthetic.outcome_kind,
            },
            "sweep": {"axis": self.sweep_axis, "values": list(self.sweep_values)},
            "methods": [m.label for m in self.methods],
        }

    @property
    def run_id(self) -> str:
        payload = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _get_number(section: dict, path: str, key: str, issues: list, default=None, required=False):
    if key not in section:
        if required:
            issues.append((f"{path}.{key}", "required field is missing"))
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        issues.append((f"{path}.{key}", f"expected a number, got {value!r}"))
        return default
    return value


def _parse_mu(section: dict, issues: list) -> dict | None:
    raw_mu = section.get("mu", {})
    if not isinstance(raw_mu, dict):
        issues.append(("synthetic.mu", f"expected a mapping, got {raw_mu!r}"))
        return None
    mu: dict[tuple[int, int], float] = {}
    for key, value in raw_mu.items():
        parts = str(key).replace(" ", "").split(",")
        if len(parts) != 2 or not all(p.lstrip("-").isdigit() for p in parts):
            issues.append((f"synthetic.mu.{key}", 'keys must look like "1,3"'))
            continue
        pair = (int(parts[0]), int(parts[1]))
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            issues.append((f"synthetic.mu.{key}", f"expected a number, got {value!r}"))
            continue
        mu[pair] = float(value)

    # The delta shortcuts position the arm-4 means relative to arm 3.
    for name, base, target in (("delta1", (1, 3), (1, 4)), ("delta2", (2, 3), (2, 4))):
        delta = _get_number(section, "synthetic", name, issues)
        if delta is None:
            continue
        if base not in mu:
            issues.append((f"synthetic.{name}", f'needs mu["{base[0]},{base[1]}"] to anchor against'))
            continue
        implied = mu[base] + float(delta)
        if target in mu and abs(mu[target] - implied) > 1e-9:
            issues.append(
                (f"synthetic.{name}", f'disagrees with mu["{target[0]},{target[1]}"]')
            )
        mu.setdefault(target, implied)
    return mu


def parse_run_config(doc: dict) -> RunConfig:
    """Validate a config document, collecting every problem at once."""
    if not isinstance(doc, dict):
        raise ConfigError([("", f"config root must be a mapping, got {type(doc).__name__}")])
    issues: list[tuple[str, str]] = []

    known_top = {"design", "synthetic", "sweep", "methods"}
    for key in sorted(set(doc) - known_top):
        issues.append((key, "unknown section"))

    design_doc = doc.get("design")
    if not isinstance(design_doc, dict):
        issues.append(("design", "required section is missing or not a mapping"))
        design_doc = {}
    synth_doc = doc.get("synthetic")
    if not isinstance(synth_doc, dict):
        issues.append(("synthetic", "required section is missing or not a mapping"))
        synth_doc = {}

    alpha = _get_number(design_doc, "design", "alpha", issues, required=True)
    salt = design_doc.get("cluster_salt", 0)
    if isinstance(salt, bool) or not isinstance(salt, int):
        issues.append(("design.cluster_salt", f"expected an integer, got {salt!r}"))
        salt = 0
    split = _get_number(design_doc, "design", "site1_split", issues, default=0.5)
    labels = design_doc.get("treatment_labels", ["T1", "T2", "T3", "T4"])
    if not (isinstance(labels, list) and len(labels) == 4 and all(isinstance(l, str) for l in labels)):
        issues.append(("design.treatment_labels", "expected four label strings"))
        labels = ["T1", "T2", "T3", "T4"]
    for key in sorted(set(design_doc) - {"alpha", "cluster_salt", "site1_split", "treatment_labels"}):
        issues.append((f"design.{key}", "unknown field"))

    design = None
    if alpha is not None:
        try:
            design = DesignConfig(
                alpha=float(alpha),
                cluster_salt=int(salt),
                site1_split=float(split),
                treatment_labels=tuple(labels),
            )
        except ValidationError as exc:
            issues.append(("design", str(exc)))

    mu = _parse_mu(synth_doc, issues)
    p_overlap = _get_number(synth_doc, "synthetic", "p_overlap", issues, required=True)
    n_users = _get_number(synth_doc, "synthetic", "n_users", issues, required=True)
    n_reps = _get_number(synth_doc, "synthetic", "n_reps", issues, required=True)
    seed = _get_number(synth_doc, "synthetic", "seed", issues, required=True)
    noise_sd = _get_number(synth_doc, "synthetic", "noise_sd", issues, default=1.0)
    covariate_dim = _get_number(synth_doc, "synthetic", "covariate_dim", issues, default=0)
    coeffs = synth_doc.get("covariate_coeffs", [])
    if not (isinstance(coeffs, list) and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in coeffs)):
        issues.append(("synthetic.covariate_coeffs", "expected a list of numbers"))
        coeffs = []
    outcome_kind = synth_doc.get("outcome_kind", "gaussian")
    known_synth = {
        "mu", "delta1", "delta2", "p_overlap", "n_users", "n_reps", "seed",
        "noise_sd", "covariate_dim", "covariate_coeffs", "outcome_kind",
    }
    for key in sorted(set(synth_doc) - known_synth):
        issues.append((f"synthetic.{key}", "unknown field"))

    synthetic = None
    if mu is not None and not issues:
        try:
            synthetic = SyntheticSpec(
                mu=mu,
                delta1=mu.get((1, 4), 0.0) - mu.get((1, 3), 0.0),
                delta2=mu.get((2, 4), 0.0) - mu.get((2, 3), 0.0),
                p_overlap=float(p_overlap),
                n_users=int(n_users),
                n_reps=int(n_reps),
                seed=int(seed),
                noise_sd=float(noise_sd),
                covariate_dim=int(covariate_dim),
                covariate_coeffs=tuple(float(c) for c in coeffs),
                outcome_kind=str(outcome_kind),
            )
        except ValidationError as exc:
            issues.append(("synthetic", str(exc)))

    sweep_doc = doc.get("sweep", {})
    axis, values = "delta1", (0.0,)
    if not isinstance(sweep_doc, dict):
        issues.append(("sweep", "expected a mapping"))
    else:
        for key in sorted(set(sweep_doc) - {"axis", "values"}):
            issues.append((f"sweep.{key}", "unknown field"))
        axis = sweep_doc.get("axis", "delta1")
        if axis not in SWEEP_AXES:
            issues.append(("sweep.axis", f"must be one of {list(SWEEP_AXES)}, got {axis!r}"))
            axis = "delta1"
        raw_values = sweep_doc.get("values", [0.0])
        if not (
            isinstance(raw_values, list)
            and raw_values
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw_values)
        ):
            issues.append(("sweep.values", "expected a non-empty list of numbers"))
            raw_values = [0.0]
        values = tuple(float(v) for v in raw_values)

    methods_doc = doc.get("methods", [m.label for m in DEFAULT_METHODS])
    methods: list[EstimatorMethod] = []
    if not (isinstance(methods_doc, list) and methods_doc):
        issues.append(("methods", "expected a non-empty list of method labels"))
    else:
        for i, label in enumerate(methods_doc):
            method = _METHOD_BY_LABEL.get(label)
            if method is None or method not in DEFAULT_METHODS:
                issues.append(
                    (f"methods[{i}]", f"unknown method {label!r}; choose from "
                     f"{[m.label for m in DEFAULT_METHODS]}")
                )
            else:
                methods.append(method)

    if issues or design is None or synthetic is None:
        if not issues:
            issues.append(("", "config could not be assembled"))
        raise ConfigError(issues)
    return RunConfig(
        design=design,
        synthetic=synthetic,
        sweep_axis=axis,
        sweep_values=values,
        methods=tuple(methods),
    )


def load_run_config(path: str | Path) -> RunConfig:
    """Parse a JSON or YAML config file into a validated RunConfig."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([(str(path), f"cannot read config: {exc}")]) from exc
    try:
        if path.suffix.lower() == ".json":
            doc = json.loads(text)
        else:
            doc = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError([(str(path), f"cannot parse config: {exc}")]) from exc
    return parse_run_config(doc)
