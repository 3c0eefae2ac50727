"""Shared test oracles: numeric gradients and small deterministic tensors."""

import torch


def finite_difference_gradients(f, params, eps=1e-5):
    """Central-difference gradient of scalar-valued f() wrt each parameter.

    Independent of autograd: perturbs one entry at a time, so it is an
    oracle for backward passes. Requires float64 parameters.
    """
    grads = []
    with torch.no_grad():
        for p in params:
            g = torch.zeros_like(p)
            flat, gflat = p.data.view(-1), g.view(-1)
            for k in range(flat.numel()):
                orig = flat[k].item()
                flat[k] = orig + eps
                fp = float(f())
                flat[k] = orig - eps
                fm = float(f())
                flat[k] = orig
                gflat[k] = (fp - fm) / (2.0 * eps)
            grads.append(g)
    return grads


def max_relative_error(analytic, numeric):
    """max over entries of |a - n| / max(|a|, |n|, 1e-6)."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = torch.maximum(torch.maximum(a.abs(), n.abs()),
                              torch.full_like(a, 1e-6))
        worst = max(worst, ((a - n).abs() / denom).max().item())
    return worst


def analytic_gradients(f, params):
    """Autograd gradient of scalar f() wrt params, as detached tensors."""
    for p in params:
        if p.grad is not None:
            p.grad = None
    f().backward()
    return [p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p)
            for p in params]
