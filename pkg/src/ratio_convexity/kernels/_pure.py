"""Pure numpy implementation of the KDE log-sum-exp kernel."""

import numpy as np

_CHUNK_ROWS = 4096


def kde_log_density_batch(points, data, inv_bandwidth, log_norm):
    """Log-density of a Gaussian product-kernel KDE at each evaluation point.

    ``log_norm`` is the precomputed additive constant
    -log m - sum(log h_j) - n/2 * log(2 pi).
    """
    scaled_points = points * inv_bandwidth
    scaled_data = data * inv_bandwidth
    total = scaled_points.shape[0]
    out = np.empty(total)
    for start in range(0, total, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, total)
        gap = scaled_points[start:stop, None, :] - scaled_data[None, :, :]
        quad = -0.5 * np.einsum("prj,prj->pr", gap, gap)
        peak = quad.max(axis=1)
        out[start:stop] = peak + np.log(
            np.exp(quad - peak[:, None]).sum(axis=1)) + log_norm
    return out
