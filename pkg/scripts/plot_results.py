"""Plots PSNR (or Michelson contrast) per method from a results.csv."""
from collections import defaultdict
from pathlib import Path

import click
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from holosim.results import read_results_csv  # noqa: E402

X_COLUMNS = ("one_minus_eta", "offset", "iteration")


@click.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), help="Image to write.")
def main(csv_path: Path, out_path: Path) -> None:
    rows = [r for r in read_results_csv(csv_path) if r["status"] == "ok"]
    if not rows:
        raise click.ClickException(f"{csv_path} has no successful rows")
    x_column = next((c for c in X_COLUMNS if c in rows[0]), None)
    y_column = "michelson" if "michelson" in rows[0] else "psnr"

    series = defaultdict(list)
    for row in rows:
        label = f"{row['method']} {float(row['wavelength']) * 1e9:.0f} nm"
        x = float(row[x_column]) if x_column else len(series[label])
        series[label].append((x, float(row[y_column])))

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, points in sorted(series.items()):
        xs, ys = zip(*sorted(points))
        ax.plot(xs, ys, marker="o", label=label)
    ax.set_xlabel(x_column or "run")
    ax.set_ylabel("PSNR [dB]" if y_column == "psnr" else "Michelson contrast")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out_path = out_path or csv_path.with_name("plot.png")
    fig.savefig(out_path, dpi=150)
    click.echo(f"Wrote {out_path}")


if __name__ == "__main__":
    main()
