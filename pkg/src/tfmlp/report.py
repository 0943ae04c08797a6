"""Rendering of profiling results: text, CSV, JSON, and figures."""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .engine import ProfileReport


def render_text(report: ProfileReport) -> str:
    lines = [
        f"preset: {report.preset}   chunks: {report.n_chunks}   hop: {report.hop_ms:.1f} ms",
        f"{'stage':<12}{'mean ms':>10}{'p50 ms':>10}{'p95 ms':>10}",
    ]
    for name, st in report.stages.items():
        lines.append(f"{name:<12}{st.mean_ms:>10.4f}{st.p50_ms:>10.4f}{st.p95_ms:>10.4f}")
    st = report.chunk
    lines.append(f"{'total':<12}{st.mean_ms:>10.4f}{st.p50_ms:>10.4f}{st.p95_ms:>10.4f}")
    verdict = "real-time" if report.rtf < 1.0 else "too slow"
    lines.append(f"RTF: {report.rtf:.4f} ({verdict}, budget {report.hop_ms:.1f} ms/chunk)")
    return "\n".join(lines)


def write_csv(report: ProfileReport, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stage", "mean_ms", "p50_ms", "p95_ms"])
        for name, st in report.stages.items():
            w.writerow([name, f"{st.mean_ms:.6f}", f"{st.p50_ms:.6f}", f"{st.p95_ms:.6f}"])
        st = report.chunk
        w.writerow(["total", f"{st.mean_ms:.6f}", f"{st.p50_ms:.6f}", f"{st.p95_ms:.6f}"])


def write_json(report: ProfileReport, path):
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_figures(report: ProfileReport, out_dir) -> list:
    """Render the stage breakdown and chunk-time series to PNG files."""
    paths = []
    names = list(report.stages)
    means = [report.stages[n].mean_ms for n in names]
    p95s = [report.stages[n].p95_ms for n in names]

    fig, ax = plt.subplots(figsize=(8, 4.5))
    x = range(len(names))
    ax.bar(x, means, color="#4878cf", label="mean")
    ax.plot(x, p95s, "k_", markersize=16, label="p95")
    ax.set_xticks(list(x))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel("ms per chunk")
    ax.set_title(f"stage timing ({report.preset}, {report.n_chunks} chunks)")
    ax.legend()
    fig.tight_layout()
    p = os.path.join(out_dir, "profile_stages.png")
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(report.chunk_series, linewidth=0.6, color="#4878cf")
    axes[0].axhline(report.hop_ms, color="#d1495b", linestyle="--",
                    label=f"budget {report.hop_ms:.0f} ms")
    axes[0].set_xlabel("chunk")
    axes[0].set_ylabel("ms")
    axes[0].set_title("per-chunk time")
    axes[0].legend()
    axes[1].hist(report.chunk_series, bins=50, color="#4878cf")
    axes[1].axvline(report.hop_ms, color="#d1495b", linestyle="--")
    axes[1].set_xlabel("ms")
    axes[1].set_title(f"distribution (RTF {report.rtf:.3f})")
    fig.tight_layout()
    p = os.path.join(out_dir, "profile_chunk_times.png")
    fig.savefig(p, dpi=120)
    plt.close(fig)
    paths.append(p)
    return paths


def write_report_dir(report: ProfileReport, out_dir) -> dict:
    """CSV + JSON + figures in one directory; returns the file map."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "profile.csv")
    json_path = os.path.join(out_dir, "profile.json")
    write_csv(report, csv_path)
    write_json(report, json_path)
    figures = write_figures(report, out_dir)
    return {"csv": csv_path, "json": json_path, "figures": figures}
