"""Report figures. Everything renders to files; nothing is shown."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
}


def _size(width=6.0, rows=1):
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    return width, width * golden * rows


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_widths(train, path, max_pulses=200):
    """Pulse width against pulse index, in ns."""
    widths = train.widths_s[:max_pulses] * 1e9
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=_size())
        ax.step(np.arange(len(widths)), widths, where="mid", marker=".", ms=3)
        ax.set_xlabel("pulse index")
        ax.set_ylabel("width (ns)")
        if len(train) > max_pulses:
            ax.set_title(f"first {max_pulses} of {len(train)} pulses")
        return _save(fig, path)


def plot_waveform(stream, path, max_bits=2000):
    """The first ``max_bits`` of the serial line as a logic trace."""
    n = min(max_bits, stream.n_bits)
    bits = np.unpackbits(stream.packed, count=n)
    t = np.arange(n + 1) / stream.line_rate_bps * 1e9
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=_size(rows=0.5))
        ax.step(t, np.append(bits, bits[-1] if n else 0), where="post")
        ax.set_ylim(-0.2, 1.2)
        ax.set_yticks([0, 1])
        ax.set_xlabel("time (ns)")
        ax.set_ylabel("line level")
        return _save(fig, path)


def plot_linearity(report, path):
    with plt.rc_context(RC):
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=_size(rows=1.4))
        codes = report.codes[:-1]
        ax1.plot(codes, report.dnl_lsb)
        ax1.set_ylabel("DNL (LSB)")
        ax2.plot(codes, report.inl_lsb)
        ax2.set_ylabel("INL (LSB)")
        ax2.set_xlabel("code")
        return _save(fig, path)


def plot_code_histogram(codes, path, bins=64, code_range=4096):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=_size())
        ax.hist(codes, bins=bins, range=(0, code_range), histtype="stepfilled", alpha=0.7)
        ax.axhline(len(codes) / bins, color="k", ls="--", lw=0.8, label="uniform")
        ax.set_xlabel("interval code")
        ax.set_ylabel("count")
        ax.legend()
        return _save(fig, path)


def plot_jitter(widths_s, path, nominal_s=None):
    """Histogram of repeated width measurements, offsets in ps."""
    widths_s = np.asarray(widths_s)
    ref = nominal_s if nominal_s is not None else widths_s.mean()
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=_size())
        ax.hist((widths_s - ref) * 1e12, bins=100)
        ax.set_xlabel(f"width - {ref * 1e9:.4f} ns (ps)")
        ax.set_ylabel("count")
        return _save(fig, path)
