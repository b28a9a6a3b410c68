"""
Sweep service - cone energies over (theta0, theta) grids written as CSV
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple
import csv
import io
import math
import os
import logging

import numpy as np
from dotenv import load_dotenv

from services.cone_service import ConeConfig, cone_service
from services.errors import AccuracyError, DomainError
from services.quadrature_service import QuadSpec

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

CSV_HEADER = ["theta0", "theta", "u_hat", "u_hat_scaled", "err", "m_max"]


@dataclass(frozen=True)
class SweepRequest:
    """
    Grid of cone geometries

    theta runs over an absolute range, skipping points with theta <= theta0,
    or, with theta_offset, over theta0 + offset, skipping theta > pi.
    """

    theta0_start: float
    theta0_stop: float
    theta0_count: int
    theta_start: float
    theta_stop: float
    theta_count: int
    theta_offset: bool = False
    output: Optional[str] = None
    spec: QuadSpec = field(default_factory=QuadSpec)

    def __post_init__(self):
        if self.theta0_count < 1 or self.theta_count < 1:
            raise DomainError("grid counts must be at least 1")
        if not (0.0 < self.theta0_start < math.pi and 0.0 < self.theta0_stop < math.pi):
            raise DomainError("theta0 range must lie in (0, pi)")
        if self.theta_offset and min(self.theta_start, self.theta_stop) <= 0.0:
            raise DomainError("theta offsets must be positive")

    def points(self) -> List[Tuple[float, float]]:
        """Grid points in row-major theta0-then-theta order"""
        theta0s = np.linspace(self.theta0_start, self.theta0_stop, self.theta0_count)
        thetas = np.linspace(self.theta_start, self.theta_stop, self.theta_count)
        points = []
        for theta0 in theta0s:
            for theta in thetas:
                value = theta0 + theta if self.theta_offset else theta
                if theta0 < value <= math.pi:
                    points.append((float(theta0), float(value)))
        return points


@dataclass
class SweepReport:
    rows: List[Dict[str, Any]]
    failures: int
    output: Optional[str] = None


def evaluate_point(theta0: float, theta: float, spec: QuadSpec) -> Dict[str, Any]:
    """One CSV row; failures keep the row with NaN in place of the error bound"""
    row = {"theta0": theta0, "theta": theta, "u_hat": math.nan,
           "u_hat_scaled": math.nan, "err": math.nan, "m_max": -1}
    try:
        result = cone_service.cone_energy(ConeConfig(theta0=theta0, theta=theta), spec)
    except (DomainError, AccuracyError) as e:
        logger.error(f"sweep point theta0={theta0:.6g}, theta={theta:.6g} failed: {e}")
        return row

    row["u_hat"] = result.u_hat
    row["u_hat_scaled"] = result.u_hat * math.sin(theta - theta0) ** 4
    row["m_max"] = result.m_max_used
    if result.converged:
        row["err"] = result.err
    else:
        logger.error(f"sweep point theta0={theta0:.6g}, theta={theta:.6g} not converged")
    return row


def _evaluate(args: Tuple[float, float, QuadSpec]) -> Dict[str, Any]:
    return evaluate_point(*args)


class SweepService:
    """Service for parallel parameter sweeps"""

    def __init__(self):
        workers = os.getenv("CASIMIR_WORKERS")
        self.workers = int(workers) if workers else (os.cpu_count() or 1)
        if self.workers < 1:
            raise ValueError("CASIMIR_WORKERS must be at least 1")

    def run(self, request: SweepRequest, workers: Optional[int] = None) -> SweepReport:
        """
        Evaluate every grid point and optionally write the CSV

        Args:
            request: grid and tolerances
            workers: process count, defaulting to CASIMIR_WORKERS

        Returns:
            SweepReport with rows in grid order
        """
        points = request.points()
        if not points:
            raise DomainError("sweep has no points with theta0 < theta <= pi")

        workers = workers or self.workers
        tasks = [(theta0, theta, request.spec) for theta0, theta in points]
        logger.info(f"sweeping {len(tasks)} points on {workers} worker(s)")
        if workers == 1:
            rows = [_evaluate(task) for task in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                rows = list(executor.map(_evaluate, tasks, chunksize=1))

        failures = sum(1 for row in rows if math.isnan(row["err"]))
        if request.output:
            self.write_csv(rows, request.output)
        return SweepReport(rows=rows, failures=failures, output=request.output)

    def render_csv(self, rows: List[Dict[str, Any]]) -> str:
        """CSV text with 17 significant digits"""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow(self.format_row(row))
        return buffer.getvalue()

    def write_csv(self, rows: List[Dict[str, Any]], path: str) -> None:
        with open(path, "w", newline="") as handle:
            handle.write(self.render_csv(rows))
        logger.info(f"wrote {len(rows)} rows to {path}")

    def format_row(self, row: Dict[str, Any]) -> List[str]:
        return [format(row[key], ".17g") if key != "m_max" else str(row[key])
                for key in CSV_HEADER]


# Global instance
sweep_service = SweepService()
