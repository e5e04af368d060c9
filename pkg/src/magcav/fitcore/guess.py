"""Starting values for sweep fits, read off the |S21| peaks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks, peak_widths

from .. import physmodel as pm
from ..errors import InputError
from ..records import Sweep
from .model import CalibrationNuisance

MIN_POINTS = 16


@dataclass(frozen=True)
class Guess:
    params: pm.HybridParams
    nuisance: CalibrationNuisance
    peaks: tuple  # peak frequencies used, ascending
    low_confidence: bool = False


def prominent_peaks(freqs, mag, count=2, min_prominence=None):
    """Frequencies, prominences and FWHM of the ``count`` most prominent maxima.

    Ties in prominence are broken towards the widest separated pair.
    """
    freqs = np.asarray(freqs, dtype=float)
    mag = np.asarray(mag, dtype=float)
    if min_prominence is None:
        # point-to-point scatter, robust to the peaks themselves
        noise = 1.4826 * np.median(np.abs(np.diff(mag))) / np.sqrt(2.0) if mag.size > 1 else 0.0
        min_prominence = max(0.05 * (mag.max() - mag.min()), 5.0 * noise)
    if not min_prominence > 0:
        return []
    idx, props = find_peaks(mag, prominence=min_prominence)
    if idx.size == 0:
        return []
    prom = props["prominences"]
    order = sorted(range(idx.size), key=lambda k: -prom[k])
    chosen = order[:count]
    if count == 2 and len(order) > 2 and prom[order[1]] == prom[order[2]]:
        tied = [k for k in order if prom[k] == prom[order[1]]]
        top = order[0]
        if prom[top] == prom[order[1]]:
            pairs = [(a, b) for i, a in enumerate(tied) for b in tied[i + 1:]]
            chosen = list(max(pairs, key=lambda ab: abs(idx[ab[0]] - idx[ab[1]])))
        else:
            chosen = [top, max(tied, key=lambda k: abs(idx[k] - idx[top]))]
    widths = peak_widths(mag, idx[chosen], rel_height=0.5)[0]
    step = np.gradient(freqs)[idx[chosen]]
    return [(float(freqs[idx[k]]), float(prom[k]), float(w * s))
            for k, w, s in zip(chosen, widths, step)]


def _uniform(freqs):
    d = np.diff(freqs)
    return d.size > 0 and np.allclose(d, d[0], rtol=1e-6, atol=0)


def estimate_delay(freqs, data, model):
    """Electrical delay maximising the coherent overlap of data and model.

    Only attempted on uniform grids (zero-padded FFT); returns 0 otherwise.
    """
    freqs = np.asarray(freqs)
    if not _uniform(freqs):
        return 0.0
    y = data * np.conj(model)
    n = y.size
    pad = 1 << int(np.ceil(np.log2(8 * n)))
    spectrum = np.fft.fft(y, pad)
    k = int(np.argmax(np.abs(spectrum)))
    if k > pad // 2:
        k -= pad
    df = freqs[1] - freqs[0]
    # sum_j y_j exp(-2 pi i j k / pad) peaks where y_j ~ exp(2 pi i j k / pad)
    return -k / (pad * df)


def linear_scale(freqs, data, model, delay=0.0):
    """Least-squares complex factor c with data ~ c * exp(-2 pi i f delay) * model."""
    m = model * np.exp(-2j * np.pi * np.asarray(freqs) * delay)
    denom = np.vdot(m, m).real
    if denom == 0:
        return 1.0 + 0j
    return np.vdot(m, data) / denom


def initial_guess(sweep: Sweep, kappa_1=None, kappa_2=None) -> Guess:
    """Seed parameters from the two most prominent |S21| maxima.

    Two peaks: cavity and magnon placed at their midpoint, coupling at half
    the separation.  One peak: bare-cavity seed with g = 0.  No peak: centre
    of the grid, flagged low-confidence.
    """
    freqs, data = sweep.freqs, sweep.s21
    if freqs.size < MIN_POINTS:
        raise InputError(f"need at least {MIN_POINTS} points, got {freqs.size}")
    span = float(freqs[-1] - freqs[0])
    mag = np.abs(data)
    peaks = prominent_peaks(freqs, mag, 2)
    low = False
    if len(peaks) >= 2:
        (fa, pa, wa), (fb, pb, wb) = peaks
        f_mid = 0.5 * (fa + fb)
        g = 0.5 * abs(fa - fb)
        kappa, gamma = max(wa, 1e-9 * span), max(wb, 1e-9 * span)
        f_c = f_fmr = f_mid
    elif len(peaks) == 1:
        f_c, _, kappa = peaks[0]
        kappa = max(kappa, 1e-9 * span)
        gamma, g, f_fmr = kappa / 2.0, 0.0, f_c
    else:
        low = True
        f_c = f_fmr = 0.5 * (freqs[0] + freqs[-1])
        kappa = gamma = span / 10.0
        g = 0.0

    k1 = kappa / 4.0 if kappa_1 is None else kappa_1
    k2 = kappa / 4.0 if kappa_2 is None else kappa_2
    k_int = max(kappa - k1 - k2, 1e-3 * kappa)
    params = pm.HybridParams(f_c, k1, k2, k_int, f_fmr, gamma, g)
    model = np.asarray(pm.transmission(freqs, params))
    # the resonances occupy a small part of the grid, so the median is
    # dominated by the off-resonant level
    background = complex(np.median(data.real), np.median(data.imag))
    signal = data - background
    delay = estimate_delay(freqs, signal, model)
    c = linear_scale(freqs, signal, model, delay)
    if c == 0:
        c, low = 1.0 + 0j, True
    nuisance = CalibrationNuisance(amplitude=abs(c), phase=float(np.angle(c)),
                                   electrical_delay=delay, background=background)
    return Guess(params, nuisance, tuple(sorted(p[0] for p in peaks)), low)
