"""
Dense numerical kernel: activations, affine layers, BCE, Adam and
finite-difference gradient verification. Everything runs in float64.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy.special import expit

from utils.exceptions import DimensionError, TrainingDivergenceError


ArrayLike = Union[float, np.ndarray]
Params = Dict[str, np.ndarray]

BCE_EPS = 1e-12
NORM_EPS = 1e-12


def sigmoid(x: ArrayLike) -> ArrayLike:
    """Numerically stable logistic function"""
    out = expit(x)
    return float(out) if np.ndim(out) == 0 else out


def activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "sigmoid":
        return expit(z)
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "linear":
        return z
    raise ValueError(f"Unknown activation {activation!r}")


def activation_grad(z: np.ndarray, out: np.ndarray, activation: str) -> np.ndarray:
    """d activation / dz evaluated elementwise, given pre-activation and output"""
    if activation == "sigmoid":
        return out * (1.0 - out)
    if activation == "relu":
        return (z > 0).astype(np.float64)
    if activation == "linear":
        return np.ones_like(z)
    raise ValueError(f"Unknown activation {activation!r}")


def dense_forward(W: np.ndarray, b: np.ndarray, h: np.ndarray, activation: str = "linear") -> np.ndarray:
    """
    activation(W . h + b) for a single input vector

    Raises:
        DimensionError: If W, b and h do not conform
    """
    W = np.asarray(W, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if W.ndim != 2 or h.shape != (W.shape[1],) or b.shape != (W.shape[0],):
        raise DimensionError(f"dense_forward shapes do not conform: W{W.shape}, h{h.shape}, b{b.shape}")
    return activate(W @ h + b, activation)


def dense_forward_batch(W: np.ndarray, b: np.ndarray, H: np.ndarray, activation: str = "linear") -> Tuple[np.ndarray, np.ndarray]:
    """Row-wise dense layer; returns (pre-activation, output)"""
    if H.ndim != 2 or H.shape[1] != W.shape[1] or b.shape != (W.shape[0],):
        raise DimensionError(f"dense_forward_batch shapes do not conform: W{W.shape}, H{H.shape}, b{b.shape}")
    z = H @ W.T + b
    return z, activate(z, activation)


def bce_loss(labels: np.ndarray, probs: np.ndarray) -> float:
    """
    Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps]

    Raises:
        DimensionError: On length mismatch or empty input
    """
    y = np.asarray(labels, dtype=np.float64).ravel()
    p = np.asarray(probs, dtype=np.float64).ravel()
    if y.shape != p.shape or len(y) == 0:
        raise DimensionError(f"bce_loss needs equal non-empty lengths, got {len(y)} and {len(p)}")
    p = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def xavier_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    """Xavier-uniform (fan_out, fan_in) matrix, limit sqrt(6 / (fan_in + fan_out))"""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def l2_normalize_rows(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Row-wise unit vectors; returns (normalized, clamped norms)"""
    norms = np.maximum(np.linalg.norm(s, axis=1, keepdims=True), NORM_EPS)
    return s / norms, norms


def l2_normalize_rows_backward(y: np.ndarray, norms: np.ndarray, grad_y: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. the unnormalized rows given y = s / |s|"""
    return (grad_y - y * np.sum(y * grad_y, axis=1, keepdims=True)) / norms


@dataclass
class AdamState:
    """Adam moments, step counter and hyperparameters"""
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)


def adam_step(params: Params, grads: Params, state: AdamState) -> Tuple[Params, AdamState]:
    """
    One bias-corrected Adam update, applied in place

    Raises:
        DimensionError: If a gradient shape differs from its parameter
        TrainingDivergenceError: If a gradient block has a non-finite entry
    """
    for name, g in grads.items():
        if name not in params or g.shape != params[name].shape:
            raise DimensionError(f"Gradient block {name!r} does not match its parameter")
        if not np.all(np.isfinite(g)):
            raise TrainingDivergenceError(f"Non-finite gradient in parameter block {name!r}")

    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t

    for name, g in grads.items():
        if name not in state.m:
            state.m[name] = np.zeros_like(params[name])
            state.v[name] = np.zeros_like(params[name])

        state.m[name] *= state.beta1
        state.m[name] += (1.0 - state.beta1) * g
        state.v[name] *= state.beta2
        state.v[name] += (1.0 - state.beta2) * (g * g)

        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        params[name] -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)

    return params, state


def finite_diff_report(
    loss_fn: Callable[[Params], float],
    params: Params,
    analytic_grads: Params,
    h: float = 1e-5,
    blocks: Optional[list] = None,
) -> Dict[str, float]:
    """
    Central-difference check per parameter block

    Each coordinate is perturbed by +/-h in place and restored. The error of a
    coordinate is |fd - analytic| / max(1, |fd|, |analytic|); a block reports
    the maximum over its coordinates.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")

    report: Dict[str, float] = {}
    for name in blocks or list(params):
        theta = params[name]
        if not theta.flags.c_contiguous:
            raise ValueError(f"Parameter block {name!r} must be C-contiguous for in-place perturbation")
        grad = analytic_grads[name]
        worst = 0.0
        flat = theta.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            f_plus = loss_fn(params)
            flat[i] = original - h
            f_minus = loss_fn(params)
            flat[i] = original
            fd = (f_plus - f_minus) / (2.0 * h)
            an = float(grad.reshape(-1)[i])
            worst = max(worst, abs(fd - an) / max(1.0, abs(fd), abs(an)))
        report[name] = worst
    return report


def finite_diff_check(
    loss_fn: Callable[[Params], float],
    params: Params,
    analytic_grads: Params,
    h: float = 1e-5,
) -> float:
    """Maximum relative error over every coordinate of every block"""
    report = finite_diff_report(loss_fn, params, analytic_grads, h)
    return max(report.values()) if report else 0.0
