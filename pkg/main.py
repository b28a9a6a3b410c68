#!/usr/bin/env python3
"""
Casimir-Polder - command-line interface
Single evaluations, verification runs and sweep CSVs for the cone and wedge
"""

import json
import math
import os
import sys
import logging
from typing import Optional

import click
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

from services.cone_service import ConeConfig, EnergyResult, cone_service
from services.errors import AccuracyError, DomainError
from services.quadrature_service import QuadSpec, quadrature_service
from services.sweep_service import SweepRequest, sweep_service
from services.thermal_service import PolarizabilityModel, ThermalConfig, thermal_service
from services.verify_service import verify_service
from services.wedge_service import WedgeConfig, wedge_service

# Configure logging
logging.basicConfig(level=os.getenv("CASIMIR_LOG_LEVEL", "INFO"))
logger = logging.getLogger(__name__)


def to_radians(value: Optional[float], deg: bool) -> Optional[float]:
    if value is None:
        return None
    return value * math.pi / 180 if deg else value


def build_spec(rel_tol: Optional[float], abs_tol: Optional[float],
               max_subdivisions: Optional[int]) -> QuadSpec:
    default = quadrature_service.default_spec
    try:
        return QuadSpec(
            rel_tol=default.rel_tol if rel_tol is None else rel_tol,
            abs_tol=default.abs_tol if abs_tol is None else abs_tol,
            max_subdivisions=default.max_subdivisions if max_subdivisions is None else max_subdivisions,
        )
    except ValueError as e:
        raise click.ClickException(str(e))


def unwritable_reason(path: str) -> Optional[str]:
    """Why path cannot be written, checked without creating it; None when it can"""
    if os.path.isdir(path):
        return "is a directory"
    if os.path.exists(path):
        return None if os.access(path, os.W_OK) else "permission denied"
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        return "no such directory"
    if not os.access(parent, os.W_OK):
        return "permission denied"
    return None


def tolerance_options(f):
    f = click.option("--max-subdivisions", type=int, default=None,
                     help="Adaptive subdivision budget per integral")(f)
    f = click.option("--abs-tol", type=float, default=None, help="Absolute tolerance")(f)
    f = click.option("--rel-tol", type=float, default=None, help="Relative tolerance")(f)
    return f


def echo_result(result: EnergyResult, as_json: bool, extra: Optional[dict] = None) -> None:
    data = result.to_dict()
    data.update(extra or {})
    if as_json:
        click.echo(json.dumps(data))
        return
    click.echo(f"u_hat        = {result.u_hat:.12g}")
    click.echo(f"err          = {result.err:.3e}")
    for key, value in (extra or {}).items():
        click.echo(f"{key:<12} = {value:.12g}")
    click.echo(f"electric     = {result.electric:.12g}")
    click.echo(f"magnetic     = {result.magnetic:.12g}")
    click.echo(f"ghost        = {result.ghost:.12g}")
    click.echo(f"m_max_used   = {result.m_max_used}")
    click.echo(f"method       = {result.method}")
    if not result.converged:
        click.echo("warning: result did not converge to the requested tolerance")


@click.group()
def cli():
    """Casimir-Polder energies near a conducting cone or wedge"""


@cli.command()
@click.option("--theta0", type=float, required=True, help="Half-opening angle")
@click.option("--theta", type=float, required=True, help="Particle polar angle")
@click.option("--r", "radius", type=float, default=1.0, show_default=True, help="Distance from the apex")
@click.option("--deg", is_flag=True, help="Angles are given in degrees")
@click.option("--m-max", type=int, default=None, help="Fixed azimuthal truncation")
@click.option("--json", "as_json", is_flag=True, help="Print a single JSON record")
@tolerance_options
def cone(theta0, theta, radius, deg, m_max, as_json, rel_tol, abs_tol, max_subdivisions):
    """Energy of a particle near a cone"""
    try:
        cfg = ConeConfig(theta0=to_radians(theta0, deg), theta=to_radians(theta, deg), r=radius)
        spec = build_spec(rel_tol, abs_tol, max_subdivisions)
        result = cone_service.cone_energy(cfg, spec, m_max=m_max)
    except (DomainError, AccuracyError) as e:
        raise click.ClickException(str(e))
    scaled = result.u_hat * math.sin(cfg.theta - cfg.theta0) ** 4
    echo_result(result, as_json, {"u_hat_scaled": scaled})


@cli.command()
@click.option("--theta0", type=float, required=True, help="Half-opening angle")
@click.option("--theta", type=float, required=True, help="Particle angle from the symmetry plane")
@click.option("--ref-theta", type=float, default=None, help="Reference angle for the relative energy")
@click.option("--deg", is_flag=True, help="Angles are given in degrees")
@click.option("--printed", is_flag=True, help="Also evaluate the printed integrand at lambda = 1")
@click.option("--json", "as_json", is_flag=True, help="Print a single JSON record")
@tolerance_options
def wedge(theta0, theta, ref_theta, deg, printed, as_json, rel_tol, abs_tol, max_subdivisions):
    """Energy of a particle near a wedge, closed form against the lambda-integral"""
    try:
        cfg = WedgeConfig(theta0=to_radians(theta0, deg), theta=to_radians(theta, deg))
        spec = build_spec(rel_tol, abs_tol, max_subdivisions)
        closed = wedge_service.wedge_energy_closed(cfg)
        integral = wedge_service.wedge_energy_integral(cfg, spec)
        data = {
            "p": cfg.p,
            "closed": closed,
            "integral": integral.value,
            "integral_err": integral.err,
            "difference": integral.value - closed,
        }
        if ref_theta is not None:
            theta_ref = to_radians(ref_theta, deg)
            relative = wedge_service.wedge_energy_relative(cfg, theta_ref, spec)
            reference = wedge_service.wedge_energy_closed(WedgeConfig(theta0=cfg.theta0, theta=theta_ref))
            data.update({
                "relative": relative.value,
                "relative_err": relative.err,
                "closed_difference": closed - reference,
            })
        if printed:
            data["printed_integrand_at_1"] = wedge_service.wedge_lambda_integrand(1.0, cfg, printed=True)
    except (DomainError, AccuracyError) as e:
        raise click.ClickException(str(e))

    if as_json:
        click.echo(json.dumps(data))
        return
    for key, value in data.items():
        click.echo(f"{key:<24} = {value:.12g}")


@cli.command()
@click.option("--theta0", type=float, required=True, help="Half-opening angle")
@click.option("--theta", type=float, required=True, help="Particle polar angle")
@click.option("--r", "radius", type=float, default=1.0, show_default=True, help="Distance from the apex")
@click.option("--tau", type=float, default=0.0, show_default=True,
              help="Dimensionless temperature 2 pi k_B T r / (hbar c)")
@click.option("--omega0", type=float, default=None,
              help="Single-oscillator resonance in units of c / r (static when omitted)")
@click.option("--n-max", type=int, default=None, help="Fixed number of Matsubara frequencies")
@click.option("--deg", is_flag=True, help="Angles are given in degrees")
@click.option("--json", "as_json", is_flag=True, help="Print a single JSON record")
@tolerance_options
def thermal(theta0, theta, radius, tau, omega0, n_max, deg, as_json, rel_tol, abs_tol, max_subdivisions):
    """Finite-temperature energy from the Matsubara sum"""
    try:
        cfg = ConeConfig(theta0=to_radians(theta0, deg), theta=to_radians(theta, deg), r=radius)
        if omega0 is None:
            model = PolarizabilityModel()
        else:
            model = PolarizabilityModel(kind="single_oscillator", omega0=omega0)
        th = ThermalConfig(tau=tau, model=model, n_max=n_max)
        result = thermal_service.thermal_energy(cfg, th, build_spec(rel_tol, abs_tol, max_subdivisions))
    except (DomainError, AccuracyError) as e:
        raise click.ClickException(str(e))
    scaled = result.u_hat * math.sin(cfg.theta - cfg.theta0) ** 4
    echo_result(result, as_json, {"u_hat_scaled": scaled})


@cli.command()
@click.option("--theta0-start", type=float, required=True)
@click.option("--theta0-stop", type=float, required=True)
@click.option("--theta0-count", type=int, default=1, show_default=True)
@click.option("--theta-start", type=float, required=True)
@click.option("--theta-stop", type=float, required=True)
@click.option("--theta-count", type=int, default=1, show_default=True)
@click.option("--theta-offset", is_flag=True, help="theta range is an offset from each theta0")
@click.option("--deg", is_flag=True, help="Angles are given in degrees")
@click.option("--workers", type=int, default=None, help="Worker processes (default CASIMIR_WORKERS)")
@click.option("-o", "--output", type=str, default="-", show_default=True,
              help="CSV path, '-' for standard output")
@tolerance_options
def sweep(theta0_start, theta0_stop, theta0_count, theta_start, theta_stop, theta_count,
          theta_offset, deg, workers, output, rel_tol, abs_tol, max_subdivisions):
    """Energies over a (theta0, theta) grid as CSV"""
    if output != "-":
        reason = unwritable_reason(output)
        if reason:
            raise click.ClickException(f"cannot write {output}: {reason}")

    try:
        request = SweepRequest(
            theta0_start=to_radians(theta0_start, deg),
            theta0_stop=to_radians(theta0_stop, deg),
            theta0_count=theta0_count,
            theta_start=to_radians(theta_start, deg),
            theta_stop=to_radians(theta_stop, deg),
            theta_count=theta_count,
            theta_offset=theta_offset,
            output=None if output == "-" else output,
            spec=build_spec(rel_tol, abs_tol, max_subdivisions),
        )
        report = sweep_service.run(request, workers=workers)
    except (DomainError, AccuracyError) as e:
        raise click.ClickException(str(e))
    except OSError as e:
        raise click.ClickException(f"cannot write {output}: {e.strerror}")

    if output == "-":
        click.echo(sweep_service.render_csv(report.rows), nl=False)
    if report.failures:
        click.echo(f"Error: {report.failures} point(s) failed", err=True)
        sys.exit(2)


@cli.command()
@click.option("--level", type=click.Choice(["fast", "full"]), default="fast", show_default=True)
@click.option("--tamper-ghost", is_flag=True, help="Negate the ghost channel (deliberate fault)")
def verify(level, tamper_ghost):
    """Run the identity suite and report residuals"""
    results = verify_service.run(level, tamper_ghost=tamper_ghost)
    for check in results:
        status = "PASS" if check.passed else "FAIL"
        line = f"{status}  {check.name:<28} residual={check.residual:.3e}  tol={check.tolerance:.1e}"
        if check.detail:
            line += f"  {check.detail}"
        click.echo(line)

    failed = [check.name for check in results if not check.passed]
    if failed:
        click.echo(f"Error: {len(failed)} check(s) failed: {', '.join(failed)}", err=True)
        sys.exit(1)
    click.echo(f"All {len(results)} checks passed")


if __name__ == "__main__":
    cli()
