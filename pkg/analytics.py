"""
Informes del pipeline: tablas TSV / JSON-lines y gráficas de barras
(cobertura por relación, distribución de patrones KB vs grafo).
"""

import csv
import json
import os
from typing import Dict, List, Mapping, Optional

import matplotlib
matplotlib.use('Agg')  # Para generar sin display
import matplotlib.pyplot as plt
import numpy as np

from core.log import get_logger
from core.metrics import MetricsReport, render_jsonl, render_tsv

log = get_logger("Analytics")

COVERAGE_COLUMNS = ["relation", "tuples", "coverage", "head_coverage", "tail_coverage"]


class ReportWriter:
    """
    Escribe los informes de una etapa en ``output_dir``.
    """

    def __init__(self, output_dir: str, charts: bool = True):
        self.output_dir = output_dir
        self.charts = charts
        os.makedirs(output_dir, exist_ok=True)
        self.colors = {
            'primary': '#2E86DE',
            'secondary': '#FF7675',
            'kb': '#4ECDC4',
            'graph': '#FF6B6B',
        }

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def save_tsv(self, rows: List[Dict], filename: str, fieldnames: List[str]) -> str:
        """Guarda lista de diccionarios en TSV con columnas en orden fijo."""
        path = self.path(filename)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.DictWriter(f, fieldnames=fieldnames, delimiter='\t', lineterminator='\n')
            writer.writeheader()
            writer.writerows(rows)
        return path

    def save_json(self, data, filename: str) -> str:
        path = self.path(filename)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write('\n')
        return path

    def write_coverage_report(self, coverage: dict) -> Dict[str, str]:
        """coverage.tsv (una fila por relación + overall + macro) y coverage.json."""
        rows = []
        for rel, stats in coverage['relations'].items():
            rows.append({
                'relation': rel,
                'tuples': stats['tuples'],
                'coverage': f"{stats['coverage']:.4f}",
                'head_coverage': f"{stats['head_coverage']:.4f}",
                'tail_coverage': f"{stats['tail_coverage']:.4f}",
            })
        total = sum(s['tuples'] for s in coverage['relations'].values())
        rows.append({'relation': 'overall', 'tuples': total,
                     'coverage': f"{coverage['overall_coverage']:.4f}",
                     'head_coverage': f"{coverage['overall_head_coverage']:.4f}",
                     'tail_coverage': ''})
        rows.append({'relation': 'macro', 'tuples': total,
                     'coverage': f"{coverage['macro_coverage']:.4f}",
                     'head_coverage': f"{coverage['macro_head_coverage']:.4f}",
                     'tail_coverage': ''})
        out = {
            'coverage_tsv': self.save_tsv(rows, 'coverage.tsv', COVERAGE_COLUMNS),
            'coverage_json': self.save_json(coverage, 'coverage.json'),
        }
        if self.charts:
            out['coverage_png'] = self.plot_coverage(coverage)
        return out

    def write_graph_statistics(self, stats: dict) -> Dict[str, str]:
        """graph_stats.tsv (aristas por relación discursiva) y graph_stats.json."""
        rows = [{'relation': rel, 'edges': n} for rel, n in stats['edges_per_relation'].items()]
        rows.append({'relation': 'total', 'edges': stats['edges']})
        return {
            'graph_stats_tsv': self.save_tsv(rows, 'graph_stats.tsv', ['relation', 'edges']),
            'graph_stats_json': self.save_json(stats, 'graph_stats.json'),
        }

    def write_metrics_report(self, report: MetricsReport) -> Dict[str, str]:
        tsv, jsonl = self.path('report.tsv'), self.path('report.jsonl')
        with open(tsv, 'w', encoding='utf-8', newline='\n') as f:
            f.write(render_tsv(report))
        with open(jsonl, 'w', encoding='utf-8', newline='\n') as f:
            f.write(render_jsonl(report))
        return {'report_tsv': tsv, 'report_jsonl': jsonl}

    def plot_coverage(self, coverage: dict) -> Optional[str]:
        """
        Barras por relación: cobertura completa y solo-cabeza.
        """
        relations = list(coverage['relations'])
        if not relations:
            log.warning("no relations to plot")
            return None
        filename = self.path('coverage.png')
        full = [coverage['relations'][r]['coverage'] for r in relations]
        head = [coverage['relations'][r]['head_coverage'] for r in relations]
        x = np.arange(len(relations))
        width = 0.38

        fig, ax = plt.subplots(figsize=(12, 6))
        ax.bar(x - width / 2, full, width, color=self.colors['primary'], edgecolor='black', label='head + tail')
        ax.bar(x + width / 2, head, width, color=self.colors['secondary'], edgecolor='black', label='head only')
        ax.set_xticks(x)
        ax.set_xticklabels(relations, rotation=30, ha='right')
        ax.set_ylim(0, 1.05)
        ax.set_ylabel('coverage', fontsize=12, fontweight='bold')
        ax.set_title('Seed KB coverage in the discourse graph', fontsize=14, fontweight='bold')
        ax.axhline(y=coverage['macro_coverage'], color='red', linestyle='--', linewidth=1.5,
                   label=f"macro {coverage['macro_coverage']:.3f}")
        ax.grid(axis='y', alpha=0.3, linestyle='--')
        ax.legend(loc='upper right')
        plt.tight_layout()
        plt.savefig(filename, dpi=150, bbox_inches='tight', metadata={'Software': None})
        plt.close(fig)
        return filename

    def write_pattern_comparison(self, comparison: Mapping) -> Dict[str, str]:
        """``comparison`` como lo devuelve ``compare_pattern_distributions``."""
        rows = [{'pattern': c, 'kb': f"{a:.4f}", 'graph': f"{b:.4f}"}
                for c, a, b in zip(comparison['patterns'], comparison['kb'], comparison['graph'])]
        out = {
            'patterns_tsv': self.save_tsv(rows, 'patterns.tsv', ['pattern', 'kb', 'graph']),
            'patterns_json': self.save_json({'pearson_r': _finite(comparison['pearson_r']),
                                             'p_value': _finite(comparison['p_value'])}, 'patterns.json'),
        }
        if self.charts:
            out['patterns_png'] = self.plot_pattern_distributions(comparison)
        return out

    def plot_pattern_distributions(self, comparison: Mapping) -> str:
        filename = self.path('patterns.png')
        codes = list(comparison['patterns'])
        x = np.arange(len(codes))
        width = 0.38
        fig, ax = plt.subplots(figsize=(14, 6))
        ax.bar(x - width / 2, comparison['kb'], width, color=self.colors['kb'], edgecolor='black',
               label='seed KB heads')
        ax.bar(x + width / 2, comparison['graph'], width, color=self.colors['graph'], edgecolor='black',
               label='graph nodes')
        ax.set_xticks(x)
        ax.set_xticklabels(codes, rotation=45, ha='right', fontsize=9)
        ax.set_ylabel('fraction', fontsize=12, fontweight='bold')
        title = 'Pattern distribution'
        r = _finite(comparison['pearson_r'])
        if r is not None:
            title += f' (Pearson r = {r:.4f})'
        ax.set_title(title, fontsize=14, fontweight='bold')
        ax.grid(axis='y', alpha=0.3, linestyle='--')
        ax.legend(loc='upper right')
        plt.tight_layout()
        plt.savefig(filename, dpi=150, bbox_inches='tight', metadata={'Software': None})
        plt.close(fig)
        return filename


def _finite(x) -> Optional[float]:
    return None if x is None or not np.isfinite(x) else float(x)
