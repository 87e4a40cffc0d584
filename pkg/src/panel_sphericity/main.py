import functools

from pathlib import Path

from typing import Callable, List, Optional

import typer

from panel_sphericity.config import load_config, resolve_seed

from panel_sphericity.core import harness, power, records, spectra

from panel_sphericity.core.console import err_console, set_level

from panel_sphericity.core.simulation import gen_panel

from panel_sphericity.core.sphericity import panel_report

from panel_sphericity.errors import InputError, PanelSphericityError, UnsupportedCaseError

from panel_sphericity.models import fmt_value, split_floats

from panel_sphericity.panel_io import read_panel_csv, write_panel_csv

from panel_sphericity.validation import run_validation

app = typer.Typer(help="John's sphericity test for large fixed-effects panels")

EXIT_OK = 0

EXIT_ERROR = 1

EXIT_REJECT = 2

FORMULAS = ("s1", "ulpa", "h1star", "s2", "s3", "supp")

def _emit(pairs) -> None:

    for key, value in pairs:

        typer.echo(f"{key}={fmt_value(value)}")

def guarded(command: Callable) -> Callable:

    """

    Map package errors to exit code 1 with a message on stderr.

    """

    @functools.wraps(command)

    def wrapper(*args, **kwargs):

        try:

            return command(*args, **kwargs)

        except PanelSphericityError as exc:

            err_console.print(f"[bold red]Error:[/] {exc}", markup=True, highlight=False)

            raise typer.Exit(EXIT_ERROR)

    return wrapper

def _seed(ctx: typer.Context, flag: Optional[int] = None, file_seed: Optional[int] = None) -> int:

    global_flag = (ctx.obj or {}).get("seed")

    return resolve_seed(flag if flag is not None else global_flag, file_seed)

@app.callback()

def main(

    ctx: typer.Context,

    seed: Optional[int] = typer.Option(None, "--seed", help="Master seed (falls back to PANEL_SPHERICITY_SEED, then 0)"),

    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log progress to stderr"),

):

    ctx.obj = {"seed": seed}

    if verbose:

        set_level("INFO")

@app.command()

@guarded

def test(

    path: Path = typer.Argument(..., help="Panel CSV with header unit,time,y,x1,...,xk"),

    variant: str = typer.Option("grj", help="grj, rj, raw or classic"),

    alpha: float = typer.Option(0.05, help="Significance level"),

    gamma4: str = typer.Option("estimate", help="Known fourth moment for the raw variant, or 'estimate'"),

):

    """

    Run a sphericity test on a panel CSV. Exit 2 when the test rejects at alpha.

    """

    if not 0 < alpha < 1:

        raise InputError("alpha must lie in (0, 1)")

    report = panel_report(read_panel_csv(path), variant, gamma4)

    for line in report.as_lines():

        typer.echo(line)

    rejected = report.rejects(alpha)

    typer.echo(f"reject={str(rejected).lower()}")

    raise typer.Exit(EXIT_REJECT if rejected else EXIT_OK)

@app.command()

@guarded

def simulate(

    ctx: typer.Context,

    config: Path = typer.Argument(..., help="Experiment config of key=value lines"),

    reps: Optional[int] = typer.Option(None, help="Override the number of replications"),

    seed: Optional[int] = typer.Option(None, "--seed", help="Override the master seed"),

    threads: Optional[int] = typer.Option(None, help="Worker threads (results do not depend on it)"),

    out: Optional[Path] = typer.Option(None, help="Per-rep CSV path; a .summary file is written next to it"),

    gap: bool = typer.Option(False, "--gap-check", help="Also run the T(U_hat - U) scaling study"),

):

    """

    Run a Monte-Carlo experiment and print its summary.

    """

    cfg = harness.load_mc_config(config, {"reps": reps})

    file_seed = cfg.seed if "seed" in cfg.model_fields_set else None

    cfg = cfg.model_copy(update={"seed": _seed(ctx, seed, file_seed)})

    settings = load_config()

    workers = threads if threads is not None else settings.THREADS

    csv_path = out or settings.OUTPUT_DIR / f"{config.stem}_seed{cfg.seed}.csv"

    summary = harness.run_experiment(cfg, threads=workers, csv_path=csv_path)

    records.save_summary(summary, Path(csv_path).with_suffix(".summary"))

    for line in summary.as_lines():

        typer.echo(line)

    if gap:

        study = harness.gap_check(cfg, threads=workers)

        _emit([("gap_expectation", study.expectation), ("gap_passed", str(study.passed).lower())])

        for point in study.points:

            _emit([(f"gap_median_abs_n{point.n}", point.stats.median_abs), (f"gap_median_raw_n{point.n}", point.median_raw)])

        if study.detail:

            typer.echo(f"gap_detail={study.detail}")

@app.command("make-panel")

@guarded

def make_panel(

    ctx: typer.Context,

    config: Path = typer.Argument(..., help="Experiment config of key=value lines"),

    out: Path = typer.Argument(..., help="Destination CSV"),

    seed: Optional[int] = typer.Option(None, "--seed", help="Override the master seed"),

    rep: int = typer.Option(0, help="Replication index whose streams are used"),

):

    """

    Write one synthetic panel (replication `rep` of the config) as a CSV.

    """

    cfg = harness.load_mc_config(config)

    file_seed = cfg.seed if "seed" in cfg.model_fields_set else None

    cfg = cfg.model_copy(update={"seed": _seed(ctx, seed, file_seed)})

    v = harness.replication_disturbances(cfg, rep)

    panel = gen_panel(cfg.beta, v, cfg.seed, (rep,), regressors=cfg.regressors)

    target = write_panel_csv(panel, out)

    _emit([("path", str(target)), ("n", panel.n), ("T", panel.T), ("k", panel.k), ("seed", cfg.seed)])

def _floats(text: Optional[str], name: str) -> List[float]:

    if text is None:

        raise InputError(f"--{name} is required for this formula")

    try:

        return split_floats(text)

    except ValueError as exc:

        raise InputError(f"--{name} must be a comma-separated list of numbers") from exc

def _required(value, name: str):

    if value is None:

        raise InputError(f"--{name} is required for this formula")

    return value

@app.command("power")

@guarded

def power_command(

    formula: str = typer.Option(..., help="s1, ulpa, h1star, s2, s3 or supp"),

    alpha: float = typer.Option(0.05, help="Significance level"),

    h: Optional[str] = typer.Option(None, help="Spike sizes h_1,...,h_r (s1)"),

    c_t: Optional[float] = typer.Option(None, "--c-t", help="c_T = n/T (s1)"),

    sigma: Optional[str] = typer.Option(None, help="Covariance: identity[:s], diagonal:l1,..., spiked:h1,..."),

    eta: Optional[str] = typer.Option(None, help="eta_1,eta_2,eta_3 (ulpa)"),

    gamma4: float = typer.Option(3.0, help="Fourth moment of the standardized errors"),

    n: Optional[int] = typer.Option(None, help="Cross-section size"),

    t: Optional[int] = typer.Option(None, "--T", "-T", help="Number of periods"),

    as_printed: bool = typer.Option(False, "--as-printed", help="Evaluate the typeset variance variant (h1star)"),

    b1: Optional[float] = typer.Option(None, "--b1", help="B_1 (s2)"),

    b2: Optional[float] = typer.Option(None, "--b2", help="B_2 (s2)"),

    tau: Optional[float] = typer.Option(None, help="Factor-count rate (s2)"),

    nu4: Optional[float] = typer.Option(None, help="nu_4 (s2); defaults to gamma4 - 3"),

    mu: Optional[float] = typer.Option(None, help="Centering mu (s3)"),

    sd: Optional[float] = typer.Option(None, help="Scale sigma of T U (s2, s3)"),

    theta: Optional[str] = typer.Option(None, help="theta_1,...,theta_4 (supp)"),

    vartheta: Optional[str] = typer.Option(None, help="vartheta_1,vartheta_2 (supp)"),

    c: Optional[float] = typer.Option(None, help="Aspect ratio c (supp)"),

    diagonal: Optional[bool] = typer.Option(None, "--diagonal/--non-diagonal", help="Sigma is diagonal (supp)"),

    centered: bool = typer.Option(False, help="Use the centred vartheta_2 convention (supp with --sigma)"),

):

    """

    Evaluate a closed-form power or limit-law formula and print every intermediate.

    """

    if formula not in FORMULAS:

        raise InputError(f"unknown formula {formula!r}; expected one of {', '.join(FORMULAS)}")

    spec = None

    if sigma is not None:

        spec = harness.parse_covariance(sigma, _required(n, "n"))

    if formula == "s1":

        spikes = _floats(h, "h")

        if c_t is None and n is not None and t is not None:

            c_t = n / t

        if c_t is None and all(v == 0 for v in spikes):

            # No signal: the power is alpha for every c_T.
            c_t = 1.0

        result = power.power_weak_lpa(spikes, _required(c_t, "c-t"), alpha)

        _emit([("power", result.power), ("argument", result.argument), *result.inputs.items()])

        return

    if formula == "ulpa":

        values = spectra.eta_limits(spec) if spec is not None else _floats(eta, "eta")

        result = power.power_weak_ulpa(values, gamma4, _required(t, "T"), alpha)

        _emit([("power", result.power), ("argument", result.argument), *result.inputs.items()])

        return

    if formula == "supp":

        if spec is not None:

            T = _required(t, "T")

            moments = spectra.moment_set(spec, T, centered=centered)

            theta_v, vartheta_v, c_v = moments.theta, moments.vartheta, moments.c

            diag = power.is_diagonal(spec) if diagonal is None else diagonal

        else:

            theta_v, vartheta_v = _floats(theta, "theta"), _floats(vartheta, "vartheta")

            c_v, T, diag = _required(c, "c"), _required(t, "T"), bool(diagonal)

        try:

            supp = power.supp_general_covariance(theta_v, vartheta_v, c_v, T, gamma4, diag, alpha)

        except UnsupportedCaseError as exc:

            raise UnsupportedCaseError(f"supplementary formula does not apply: {exc}") from exc

        _emit([

            ("power", supp.power), ("s2", supp.s2), ("center", supp.center), ("branch", supp.branch),

            ("identity_variance_standard", supp.identity_variance_standard),

            ("identity_variance_centered", supp.identity_variance_centered),

            ("theta", ",".join(fmt_value(float(v)) for v in theta_v)),

            ("vartheta", ",".join(fmt_value(float(v)) for v in vartheta_v)), ("c", c_v),

        ])

        typer.echo(f"notes={supp.notes}")

        return

    # h1star, s2 and s3 share the unbounded-norm moments when a covariance is given.

    moments = None

    if spec is not None:

        T = _required(t, "T")

        moments = power.h1star_moments(spectra.sigma_traces(spec), gamma4, spec.dim, T, as_printed=as_printed)

        _emit([

            ("mu", moments.mu), ("T_mu", T * moments.mu), ("sigma2", moments.sigma2),

            ("theta1", moments.theta1), ("theta2", moments.theta2),

            ("omega1", moments.omega1), ("omega2", moments.omega2), ("omega3", moments.omega3),

            ("n_plus_gamma4_minus_2", spec.dim + gamma4 - 2.0),

        ])

    if formula == "h1star":

        _required(moments, "sigma")

        return

    if formula == "s2":

        if spec is not None:

            st = spectra.sigma_traces(spec)

            b1, b2, sd = st.tr1 / st.n, st.tr2 / st.n, moments.sigma

        result = power.power_s2(

            _required(b1, "b1"), _required(b2, "b2"), _required(n, "n"), _required(tau, "tau"),

            gamma4, _required(sd, "sd"), alpha, nu4,

        )

    else:

        if moments is not None:

            mu, sd = moments.mu, moments.sigma

        result = power.power_s3(_required(mu, "mu"), _required(sd, "sd"), _required(n, "n"), _required(t, "T"), gamma4, alpha)

    _emit([("power", result.power), ("argument", result.argument), *result.inputs.items()])

@app.command()

@guarded

def validate(

    ctx: typer.Context,

    scale: float = typer.Option(1.0, help="Multiplier on replication counts"),

    threads: Optional[int] = typer.Option(None, help="Worker threads"),

    fail_fast: bool = typer.Option(False, "--fail-fast", help="Stop at the first failing criterion"),

    only: Optional[List[str]] = typer.Option(None, "--only", help="Run only the named criteria"),

    corrupt_normal_cdf: bool = typer.Option(False, "--corrupt-normal-cdf", hidden=True),

):

    """

    Run the acceptance suite. Exit 1 if any criterion fails.

    """

    if scale <= 0:

        raise InputError("scale must be positive")

    workers = threads if threads is not None else load_config().THREADS

    run = run_validation(

        scale=scale, threads=workers, corrupt=corrupt_normal_cdf,

        fail_fast=fail_fast, seed=_seed(ctx), only=only,

    )

    for result in run.results:

        typer.echo(result.as_line())

    typer.echo(f"passed={sum(r.passed for r in run.results)}/{len(run.results)}")

    if not run.success:

        err_console.print(f"[bold red]Failed criteria:[/] {', '.join(run.failed)}", markup=True, highlight=False)

        raise typer.Exit(EXIT_ERROR)

if __name__ == "__main__":

    app()
