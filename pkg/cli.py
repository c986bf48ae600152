"""Command-line surface: test, first-time, bandwidth, simulate, surface and serve."""
from pathlib import Path
from typing import Callable, List, Optional, Tuple
import logging
import sys
import typer
from typer.core import TyperGroup

try:
    from typer._click.exceptions import ClickException
except ImportError:
    from click.exceptions import ClickException
from pydantic import ValidationError
from core.config import settings
from core.errors import GradualChangeError, InvalidConfigError
from core.log import configure_logging
from data.loader import (
    load_csv,
    write_first_time_csv,
    write_json,
    write_study_csv,
    write_surface_csv,
)
from data.models import (
    BenchmarkKind,
    DgpSpec,
    ErrorProcess,
    FunctionalSeries,
    MeanFunction,
    MissingPolicy,
    TestConfig,
)
from services.inference_service import fit_deviation, run_test, run_tests
from services.simulation_service import rejection_study
from services.tuning_service import cv_bandwidth

logger = logging.getLogger(__name__)


def _error_line(code: str, message: str) -> str:
    text = " ".join(str(message).split()).replace('"', '\\"')
    return f'error code={code} message="{text}"'


def _run(command: Callable[[], None]) -> None:
    """Map failures to one machine-readable stderr line and an exit code."""
    try:
        command()
    except GradualChangeError as e:
        logger.debug(f"{e.code}: {e.message}")
        typer.echo(_error_line(e.code, e.message), err=True)
        raise typer.Exit(code=2)
    except typer.Exit:
        raise
    except Exception as e:
        logger.debug(f"Internal error: {str(e)}", exc_info=True)
        typer.echo(_error_line("Internal", str(e)), err=True)
        raise typer.Exit(code=1)


class ErrorLineGroup(TyperGroup):
    """Reports usage errors (missing or malformed options) as one error line with exit code 2."""

    def main(self, *args, standalone_mode: bool = True, **kwargs):
        try:
            rv = super().main(*args, standalone_mode=False, **kwargs)
        except ClickException as e:
            if not standalone_mode:
                raise
            typer.echo(_error_line("InvalidConfig", e.format_message()), err=True)
            sys.exit(2)
        except typer.Abort:
            if not standalone_mode:
                raise
            typer.echo(_error_line("Aborted", "aborted"), err=True)
            sys.exit(1)
        if not standalone_mode:
            return rv
        sys.exit(rv if isinstance(rv, int) else 0)


app = typer.Typer(
    cls=ErrorLineGroup,
    add_completion=False,
    help="Detect relevant gradual changes in functional time series.",
)


def _floats(text: str, name: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InvalidConfigError(f"--{name} must be a comma-separated list of numbers, got {text!r}")


def _bandwidth(text: str) -> Optional[float]:
    if text.strip().lower() == "cv":
        return None
    try:
        return float(text)
    except ValueError:
        raise InvalidConfigError(f"--bandwidth must be a number or 'cv', got {text!r}")


def _blocks(text: str) -> Optional[Tuple[int, int]]:
    if text.strip().lower() == "auto":
        return None
    try:
        q, r = (int(x) for x in text.split(","))
    except ValueError:
        raise InvalidConfigError(f"--blocks must be 'Q,R' or 'auto', got {text!r}")
    return q, r


def _config(**kwargs) -> TestConfig:
    try:
        return TestConfig(**kwargs)
    except ValidationError as e:
        raise InvalidConfigError(str(e))


def _load(path: Path, long: bool, max_missing: Optional[float]) -> FunctionalSeries:
    if not path.is_file():
        raise InvalidConfigError(f"--input {path} is not a readable file")
    try:
        policy = MissingPolicy() if max_missing is None else MissingPolicy(max_missing_fraction=max_missing)
    except ValidationError as e:
        raise InvalidConfigError(str(e))
    return load_csv(path, policy, long=long)


InputOpt = typer.Option(..., "--input", "-i", help="Wide CSV: label column, numeric grid header")
LongOpt = typer.Option(False, "--long", help="Input holds label,s,value triples")
MissingOpt = typer.Option(None, "--max-missing", help="Drop rows missing more than this fraction of cells")
BenchmarkOpt = typer.Option(BenchmarkKind.INITIAL, "--benchmark", help="Benchmark curve")
BenchmarkValuesOpt = typer.Option(None, "--benchmark-values", help="Comma-separated curve for the fixed benchmark")
X0Opt = typer.Option(0.0, "--x0", help="Start of the monitoring window")
X1Opt = typer.Option(1.0, "--x1", help="End of the monitoring window")
BandwidthOpt = typer.Option("cv", "--bandwidth", help="Bandwidth, or 'cv' for cross-validation")
BlocksOpt = typer.Option("auto", "--blocks", help="Block lengths 'Q,R', or 'auto'")
RhoOpt = typer.Option(None, "--rho", help="Extremal-set tolerance (default 0.1 log n / sqrt(nh))")
BootOpt = typer.Option(None, "--boot", help="Bootstrap replicates")
SeedOpt = typer.Option(0, "--seed", help="Random seed")
ThreadsOpt = typer.Option(None, "--threads", help="Worker threads (default GRADUAL_THREADS)")
AlphaOpt = typer.Option(None, "--alpha", help="Test level")


def _test_config(benchmark, benchmark_values, x0, x1, bandwidth, blocks, rho, boot, seed, threads,
                 delta_n: Optional[float] = None) -> TestConfig:
    return _config(
        x0=x0,
        x1=x1,
        benchmark=benchmark,
        benchmark_values=None if benchmark_values is None else _floats(benchmark_values, "benchmark-values"),
        bandwidth=_bandwidth(bandwidth),
        blocks=_blocks(blocks),
        rho=rho,
        delta_n=delta_n,
        boot=settings.BOOTSTRAP_REPS if boot is None else boot,
        seed=seed,
        threads=settings.THREADS if threads is None else threads,
    )


@app.callback()
def main(log_level: str = typer.Option(settings.LOG_LEVEL, "--log-level", help="Logging level")):
    configure_logging(log_level)


@app.command("test")
def test_command(
        input: Path = InputOpt,
        long: bool = LongOpt,
        max_missing: Optional[float] = MissingOpt,
        benchmark: BenchmarkKind = BenchmarkOpt,
        benchmark_values: Optional[str] = BenchmarkValuesOpt,
        x0: float = X0Opt,
        x1: float = X1Opt,
        delta: Optional[float] = typer.Option(None, "--delta", help="Relevance threshold"),
        deltas: Optional[str] = typer.Option(None, "--deltas", help="Comma-separated thresholds, one result each"),
        alpha: Optional[float] = AlphaOpt,
        bandwidth: str = BandwidthOpt,
        blocks: str = BlocksOpt,
        rho: Optional[float] = RhoOpt,
        boot: Optional[int] = BootOpt,
        seed: int = SeedOpt,
        threads: Optional[int] = ThreadsOpt,
        out: Path = typer.Option(..., "--out", "-o", help="Result JSON"),
):
    """Test H0: d_inf <= delta against a relevant deviation."""
    def command():
        if (delta is None) == (deltas is None):
            raise InvalidConfigError("give exactly one of --delta and --deltas")
        config = _test_config(benchmark, benchmark_values, x0, x1, bandwidth, blocks, rho, boot, seed, threads)
        series = _load(input, long, max_missing)
        grid = [delta] if deltas is None else _floats(deltas, "deltas")
        results = run_tests(series, grid, settings.ALPHA if alpha is None else alpha, config)
        write_json(results[0] if deltas is None else results, out)
        for result in results:
            typer.echo(f"delta={result.delta:g} T={result.T:.6g} quantile={result.quantile:.6g} reject={result.reject}")

    _run(command)


@app.command("first-time")
def first_time_command(
        input: Path = InputOpt,
        long: bool = LongOpt,
        max_missing: Optional[float] = MissingOpt,
        benchmark: BenchmarkKind = BenchmarkOpt,
        benchmark_values: Optional[str] = BenchmarkValuesOpt,
        x0: float = X0Opt,
        x1: float = X1Opt,
        delta: float = typer.Option(..., "--delta", help="Relevance threshold"),
        delta_n: Optional[float] = typer.Option(None, "--delta-n", help="Crossing slack (default rho)"),
        alpha: Optional[float] = AlphaOpt,
        bandwidth: str = BandwidthOpt,
        blocks: str = BlocksOpt,
        rho: Optional[float] = RhoOpt,
        boot: Optional[int] = BootOpt,
        seed: int = SeedOpt,
        threads: Optional[int] = ThreadsOpt,
        out: Path = typer.Option(..., "--out", "-o", help="Result JSON"),
        csv: Optional[Path] = typer.Option(None, "--csv", help="Per-s CSV (default: next to --out)"),
):
    """Estimate when the deviation first reaches delta, alongside the test at delta."""
    def command():
        if delta <= 0:
            raise InvalidConfigError(f"first time needs --delta > 0, got {delta}")
        config = _test_config(benchmark, benchmark_values, x0, x1, bandwidth, blocks, rho, boot, seed, threads,
                              delta_n=delta_n)
        series = _load(input, long, max_missing)
        test = run_test(series, delta, settings.ALPHA if alpha is None else alpha, config)
        result = test.first_time
        write_json(result, out)
        write_first_time_csv(result, series.s_grid, csv or out.with_suffix(".csv"))
        typer.echo(f"first time={result.global_} label={result.global_label} reject={test.reject}")

    _run(command)


@app.command("bandwidth")
def bandwidth_command(
        input: Path = InputOpt,
        long: bool = LongOpt,
        max_missing: Optional[float] = MissingOpt,
        grid: Optional[str] = typer.Option(None, "--grid", help="Comma-separated candidate bandwidths"),
        folds: int = typer.Option(settings.CV_FOLDS, "--folds", help="Number of folds"),
        out: Path = typer.Option(..., "--out", "-o", help="CV report JSON"),
):
    """Cross-validate the bandwidth."""
    def command():
        series = _load(input, long, max_missing)
        candidates = None if grid is None else _floats(grid, "grid")
        report = cv_bandwidth(series, candidates, folds)
        write_json(report, out)
        typer.echo(f"h={report.chosen:.6g}")

    _run(command)


@app.command("simulate")
def simulate_command(
        mean: MeanFunction = typer.Option(MeanFunction.MU1, "--mean", help="Mean surface"),
        errors: ErrorProcess = typer.Option(ErrorProcess.IID, "--errors", help="Error process"),
        n: int = typer.Option(..., "--n", help="Curves per series"),
        points: int = typer.Option(settings.SIMULATION_POINTS, "--points", help="Grid points per curve"),
        reps: int = typer.Option(..., "--reps", help="Simulation runs"),
        deltas: str = typer.Option(..., "--deltas", help="Comma-separated thresholds"),
        alpha: Optional[float] = AlphaOpt,
        boot: int = typer.Option(200, "--boot", help="Bootstrap replicates per run"),
        bandwidth: str = BandwidthOpt,
        seed: int = SeedOpt,
        threads: Optional[int] = ThreadsOpt,
        out: Path = typer.Option(..., "--out", "-o", help="Study CSV"),
):
    """Empirical rejection rates on synthetic data."""
    def command():
        if mean == MeanFunction.CUSTOM:
            raise InvalidConfigError("custom means are available from Python only")
        try:
            spec = DgpSpec(mean=mean, errors=errors, n=n, N=points, seed=seed)
        except ValidationError as e:
            raise InvalidConfigError(str(e))
        rows = rejection_study(
            spec,
            _floats(deltas, "deltas"),
            settings.ALPHA if alpha is None else alpha,
            reps,
            boot,
            seed,
            bandwidth=_bandwidth(bandwidth),
            threads=settings.THREADS if threads is None else threads,
        )
        write_study_csv(rows, out)
        for row in rows:
            typer.echo(f"delta={row.delta:g} rejection_rate={row.rejection_rate:.4f}")

    _run(command)


@app.command("surface")
def surface_command(
        input: Path = InputOpt,
        long: bool = LongOpt,
        max_missing: Optional[float] = MissingOpt,
        benchmark: BenchmarkKind = BenchmarkOpt,
        benchmark_values: Optional[str] = BenchmarkValuesOpt,
        x0: float = X0Opt,
        x1: float = X1Opt,
        bandwidth: str = BandwidthOpt,
        seed: int = SeedOpt,
        out: Path = typer.Option(..., "--out", "-o", help="Long CSV t,s,mu_tilde,g_hat,deviation"),
):
    """Write the corrected surface, benchmark and deviation for plotting."""
    def command():
        config = _test_config(benchmark, benchmark_values, x0, x1, bandwidth, "auto", None, None, seed, None)
        fit = fit_deviation(_load(input, long, max_missing), config)
        write_surface_csv(fit, out)
        typer.echo(f"d_inf={fit.deviation.sup:.6g} h={fit.bandwidth:.6g}")

    _run(command)


@app.command("serve")
def serve_command(
        host: str = typer.Option("127.0.0.1", "--host"),
        port: int = typer.Option(8000, "--port"),
):
    """Run the HTTP API."""
    import uvicorn
    uvicorn.run("main:app", host=host, port=port, log_level=settings.LOG_LEVEL.lower())


if __name__ == "__main__":
    app()
