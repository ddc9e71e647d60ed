"""Entropic functionals of a channel and an input ensemble.

The public functions take validated :class:`DensityMatrix`/:class:`Ensemble`
values.  The ``batch_*`` helpers work on stacked raw arrays and are what the
optimizer calls in its inner loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import KrausChannel, apply, apply_array, apply_extended
from .qmatrix import (
    EIG_CLIP,
    DensityMatrix,
    Ensemble,
    purify,
    von_neumann_entropy,
)


@dataclass(frozen=True)
class TradeoffEvaluation:
    """The three entropy terms of the limited-entanglement rate and their combination.

    ``rate = term_avg_input_entropy + term_avg_output_entropy - term_joint_entropy``
    and the entanglement cost equals ``term_avg_input_entropy``.
    """

    rate: float
    entanglement_cost: float
    term_avg_input_entropy: float
    term_avg_output_entropy: float
    term_joint_entropy: float


def batch_entropies(mats: np.ndarray) -> np.ndarray:
    """Entropies in bits of a stack ``(..., n, n)`` of Hermitian matrices."""
    lam = np.linalg.eigvalsh(mats)
    lam = np.where(lam > EIG_CLIP, lam, 1.0)
    return np.maximum(-np.sum(lam * np.log2(lam), axis=-1), 0.0)


def batch_apply(kraus: np.ndarray, mats: np.ndarray) -> np.ndarray:
    """Apply a ``(K, dout, din)`` Kraus stack to ``(k, din, din)`` inputs."""
    return np.einsum("xab,ibc,xdc->iad", kraus, mats, kraus.conj())


def batch_joint_entropies(kraus: np.ndarray, mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Input entropies and ``H((N x I)(phi_rho))`` for each canonical purification.

    The joint output ``sum_x w_x w_x^dagger`` with ``w_x = (A_x x I)|phi>`` has the
    same nonzero spectrum as the ``K x K`` Gram matrix of the ``w_x``, which is
    what gets diagonalized.
    """
    lam, vecs = np.linalg.eigh(mats)
    lam = np.clip(lam, 0.0, None)
    lam_c = np.where(lam > EIG_CLIP, lam, 1.0)
    h_in = np.maximum(-np.sum(lam_c * np.log2(lam_c), axis=-1), 0.0)
    # psi_i[a, r] = sum_j sqrt(l_ij) v_ij[a] v_ij[r]
    psi = np.einsum("iaj,ij,irj->iar", vecs, np.sqrt(lam), vecs)
    w = np.einsum("xab,ibr->ixar", kraus, psi)
    gram = np.einsum("ixar,iyar->ixy", w.conj(), w)
    return h_in, batch_entropies(gram)


def holevo_chi(ens: Ensemble) -> float:
    """``H(sum p_i sigma_i) - sum p_i H(sigma_i)`` in bits."""
    avg = von_neumann_entropy(ens.average())
    return avg - float(sum(p * von_neumann_entropy(s) for p, s in zip(ens.probs, ens.states)))


def channel_chi(ch: KrausChannel, ens: Ensemble) -> float:
    """Holevo quantity of the channel outputs ``{N(sigma_i), p_i}``."""
    if ens.dim != ch.dim_in:
        raise ValueError(f"ensemble dim {ens.dim} does not match channel input {ch.dim_in}")
    return holevo_chi(Ensemble(tuple(apply(ch, s) for s in ens.states), ens.probs))


def joint_output_entropy(ch: KrausChannel, rho: DensityMatrix) -> float:
    """``H((N x I)(phi_rho))`` for the canonical purification of `rho`."""
    return von_neumann_entropy(apply_extended(ch, purify(rho)).state)


def quantum_mutual_information(ch: KrausChannel, rho: DensityMatrix) -> float:
    """``H(rho) + H(N(rho)) - H((N x I)(phi_rho))`` in bits."""
    if rho.dim != ch.dim_in:
        raise ValueError(f"state dim {rho.dim} does not match channel input {ch.dim_in}")
    return (
        von_neumann_entropy(rho)
        + von_neumann_entropy(apply(ch, rho))
        - joint_output_entropy(ch, rho)
    )


def ensemble_cost(ens: Ensemble) -> float:
    """Average input entropy ``sum p_i H(rho_i)``, in ebits per channel use."""
    return float(sum(p * von_neumann_entropy(s) for p, s in zip(ens.probs, ens.states)))


def tradeoff_objective(ch: KrausChannel, ens: Ensemble) -> TradeoffEvaluation:
    """Rate achievable with ensemble `ens` at entanglement cost ``sum p_i H(rho_i)``."""
    if ens.dim != ch.dim_in:
        raise ValueError(f"ensemble dim {ens.dim} does not match channel input {ch.dim_in}")
    avg_in = ensemble_cost(ens)
    rho_bar = ens.average()
    avg_out = von_neumann_entropy(DensityMatrix(apply_array(ch, rho_bar.matrix)))
    joint = float(sum(p * joint_output_entropy(ch, s) for p, s in zip(ens.probs, ens.states)))
    return TradeoffEvaluation(
        rate=avg_in + avg_out - joint,
        entanglement_cost=avg_in,
        term_avg_input_entropy=avg_in,
        term_avg_output_entropy=avg_out,
        term_joint_entropy=joint,
    )
