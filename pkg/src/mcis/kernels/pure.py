"""Pure numpy implementations of the hot kernels.

These are the reference semantics; the compiled extension in ``_fastcore``
mirrors them exactly. Integer bookkeeping (confusion counts) is identical
between backends; floating-point pooling sums may differ at the few-ulp
level because numpy uses pairwise summation.
"""

import numpy as np

BACKEND = "pure"


def mean_pool(table, token_ids, offsets):
    """Mean of embedding rows per segment.

    table: (V, d) float64; token_ids: flat int64 row indices; offsets:
    (n+1,) int64 segment boundaries into token_ids. Returns (n, d).
    """
    n = len(offsets) - 1
    d = table.shape[1]
    out = np.empty((n, d), dtype=np.float64)
    rows = table[token_ids]
    for i in range(n):
        s, e = offsets[i], offsets[i + 1]
        out[i] = rows[s:e].sum(axis=0) / (e - s)
    return out


def scatter_mean_grad(grad, token_ids, offsets, n_rows):
    """Adjoint of mean_pool: distribute segment gradients onto table rows."""
    d = grad.shape[1]
    table_grad = np.zeros((n_rows, d), dtype=np.float64)
    for i in range(grad.shape[0]):
        s, e = offsets[i], offsets[i + 1]
        g = grad[i] / (e - s)
        np.add.at(table_grad, token_ids[s:e], g)
    return table_grad


def lattice_weighted_f1(factual, label_cf, context_cf, gold, lam_hat, lam_tilde,
                        drop_zero_gold):
    """Weighted binary F1 of debiased scores for every lambda cell.

    For cell c the score of sample i is
    ``factual[i] - lam_hat[c]*label_cf[i] - lam_tilde[c]*context_cf[i]``.
    Under ``drop_zero_gold`` samples with gold == 0 are excluded and a
    prediction is positive iff score > 0; otherwise all samples count and
    positive means score >= 0 (gold >= 0).
    Returns a float64 array of len(lam_hat) metric values.
    """
    factual = np.asarray(factual, dtype=np.float64)
    label_cf = np.asarray(label_cf, dtype=np.float64)
    context_cf = np.asarray(context_cf, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if drop_zero_gold:
        keep = gold != 0.0
        factual, label_cf, context_cf, gold = (
            factual[keep], label_cf[keep], context_cf[keep], gold[keep])
        gold_pos = gold > 0.0
    else:
        gold_pos = gold >= 0.0
    sup_p = int(gold_pos.sum())
    sup_n = int(gold_pos.size - sup_p)
    out = np.empty(len(lam_hat), dtype=np.float64)
    for c in range(len(lam_hat)):
        scores = factual - lam_hat[c] * label_cf - lam_tilde[c] * context_cf
        pred_pos = scores > 0.0 if drop_zero_gold else scores >= 0.0
        tp_p = int(np.count_nonzero(pred_pos & gold_pos))
        fp_p = int(np.count_nonzero(pred_pos & ~gold_pos))
        fn_p = sup_p - tp_p
        tp_n = sup_n - fp_p
        fp_n = fn_p
        fn_n = fp_p
        out[c] = _weighted_f1_from_counts(tp_p, fp_p, fn_p, sup_p,
                                          tp_n, fp_n, fn_n, sup_n)
    return out


def _weighted_f1_from_counts(tp_p, fp_p, fn_p, sup_p, tp_n, fp_n, fn_n, sup_n):
    f1_p = _binary_f1(tp_p, fp_p, fn_p)
    f1_n = _binary_f1(tp_n, fp_n, fn_n)
    total = sup_p + sup_n
    if total == 0:
        return 0.0
    return (sup_p * f1_p + sup_n * f1_n) / total


def _binary_f1(tp, fp, fn):
    prec = tp / (tp + fp) if tp + fp > 0 else 0.0
    rec = tp / (tp + fn) if tp + fn > 0 else 0.0
    if prec + rec == 0.0:
        return 0.0
    return 2.0 * prec * rec / (prec + rec)
