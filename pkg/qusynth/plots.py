"""SVG figures. Rendering is deterministic: fixed hash salt, no date metadata."""
import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams['svg.hashsalt'] = 'qusynth'
plt.rcParams['svg.fonttype'] = 'path'

LEVEL_LABELS = ('|0>', '|1>', '|2>')


def write_svg(fig, path):
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)


def population_figure(times, populations, t_ab: float, title: str = ''):
    fig, ax = plt.subplots(figsize=(6, 4))
    for level in range(3):
        ax.plot(np.asarray(times)/t_ab, populations[:, level], label=f'P{level}')
    ax.set_xlabel('t / t_AB')
    ax.set_ylabel('population')
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(loc='best')
    fig.tight_layout()
    return fig


def detuning_figure(curves: dict, threshold: float):
    """curves: label -> (ratios, fidelities)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (ratios, values) in curves.items():
        ax.plot(ratios, values, marker='.', label=label)
    ax.axhline(threshold, color='grey', linestyle='--', linewidth=0.8)
    ax.set_xlabel('Delta / Omega')
    ax.set_ylabel('average fidelity')
    ax.legend(loc='best')
    fig.tight_layout()
    return fig


def density_figure(rho: np.ndarray, reference: np.ndarray | None = None, title: str = ''):
    """Real and imaginary parts as bars, with the ideal state as outlines."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    positions = np.arange(9)
    labels = [f'{i}{j}' for i in range(3) for j in range(3)]
    for ax, part, name in zip(axes, (np.real, np.imag), ('Re', 'Im')):
        ax.bar(positions, part(rho).ravel(), color='tab:blue', width=0.6)
        if reference is not None:
            ax.bar(positions, part(reference).ravel(), fill=False, edgecolor='black', width=0.6)
        ax.set_xticks(positions, labels)
        ax.set_ylim(-0.6, 0.6)
        ax.set_title(f'{name} rho {title}'.strip())
    fig.tight_layout()
    return fig


def averaging_figure(scans, residuals: dict, spreads: dict):
    """Residual against the largest N and the max-min spread, per metric."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for label, values in residuals.items():
        axes[0].plot(scans, values, marker='o', label=label)
    for label, values in spreads.items():
        axes[1].semilogy(scans, np.clip(values, 1e-12, None), marker='o', label=label)
    axes[0].set_ylabel('residual')
    axes[1].set_ylabel('spread')
    for ax in axes:
        ax.set_xlabel('averaged scans N')
        ax.legend(loc='best')
    fig.tight_layout()
    return fig


def fractions_figure(fractions):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    fractions = np.asarray(fractions)
    positions = np.arange(6)
    for j in range(3):
        ax.bar(positions + (j - 1)*0.25, fractions[:, j], width=0.25, label=LEVEL_LABELS[j])
    ax.set_xticks(positions, [f'R{i + 1}' for i in range(6)])
    ax.set_ylabel('fraction')
    ax.legend(loc='best')
    fig.tight_layout()
    return fig
