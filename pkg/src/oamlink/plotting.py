"""Static PNG renderings of the sweep tables (Agg backend, no display)."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .link import FEC_THRESHOLD  # noqa: E402


def _save(fig, path):
    tmp = os.path.join(os.path.dirname(os.path.abspath(path)), "." + os.path.basename(path) + ".tmp")
    fig.savefig(tmp, dpi=120, bbox_inches="tight", format="png", metadata={"Software": None})
    plt.close(fig)
    os.replace(tmp, path)


def plot_pattern_cut(cut, path, title=""):
    deg = np.degrees(cut.angles)
    peak = np.max(cut.amplitude)
    db = 20 * np.log10(np.maximum(cut.amplitude / peak, 1e-15))
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(deg, db, "k-", label="amplitude")
    ax.set_xlabel("azimuth (deg)")
    ax.set_ylabel("normalized amplitude (dB)")
    ax.set_ylim(max(db.min(), -60), 3)
    ax2 = ax.twinx()
    ax2.plot(deg, np.degrees(cut.phase), "b--", label="phase")
    ax2.set_ylabel("unwrapped phase (deg)")
    ax.set_title(title)
    _save(fig, path)


def plot_capacity(table, path):
    snr = table.column("snr_db")
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in table.columns[1:]:
        ax.plot(snr, table.column(name), marker="o", label=name.replace("capacity_", ""))
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("capacity (bits/s/Hz)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    _save(fig, path)


def plot_condition(table, path):
    labels = [f"{c} {t}x{r}" for c, t, r in zip(table.column("configuration"), table.column("tx"),
                                                 table.column("rx"))]
    cond = np.array(table.column("cond_number"), dtype=float)
    finite = np.where(np.isfinite(cond), cond, 1e18)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(labels)), np.log10(finite), color=["grey" if not np.isfinite(c) else "C0" for c in cond])
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("log10 condition number")
    _save(fig, path)


def plot_ber(table, path):
    snr = table.column("snr_db")
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in ("ber_stream1", "ber_stream2"):
        vals = np.maximum(np.array(table.column(name), dtype=float), 1e-7)
        ax.semilogy(snr, vals, marker="o", label=name)
    ax.axhline(FEC_THRESHOLD, color="r", ls=":", label="FEC threshold")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _save(fig, path)
