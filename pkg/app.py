#!/usr/bin/env python3
"""
Casimir-Polder Web API - Flask Backend
JSON endpoints for cone, wedge and finite-temperature energy evaluations
"""

from flask import Flask, request, jsonify
import os
import math
from dotenv import load_dotenv
import logging

# Load environment variables from .env file
load_dotenv()

# Import services
from services.cone_service import ConeConfig, cone_service
from services.errors import AccuracyError, DomainError
from services.quadrature_service import QuadSpec, quadrature_service
from services.thermal_service import PolarizabilityModel, ThermalConfig, thermal_service
from services.wedge_service import WedgeConfig, wedge_service

app = Flask(__name__)

# Configure logging
logging.basicConfig(level=os.getenv('CASIMIR_LOG_LEVEL', 'INFO'))
logger = logging.getLogger(__name__)


def read_angle(data, key, required=True):
    """Angle from the request body, in degrees when 'deg' is true"""
    if data.get(key) is None:
        if required:
            raise DomainError(f"{key} is required")
        return None
    value = float(data[key])
    return value * math.pi / 180 if data.get('deg') else value


def read_spec(data):
    """Tolerances from the request body, falling back to the service defaults"""
    default = quadrature_service.default_spec
    try:
        return QuadSpec(
            rel_tol=float(data.get('rel_tol', default.rel_tol)),
            abs_tol=float(data.get('abs_tol', default.abs_tol)),
            max_subdivisions=int(data.get('max_subdivisions', default.max_subdivisions)),
        )
    except ValueError as e:
        raise DomainError(str(e)) from e


def error_response(e):
    """Map evaluation errors to JSON responses"""
    if isinstance(e, DomainError):
        return jsonify({'success': False, 'error': str(e)}), 400
    if isinstance(e, AccuracyError):
        return jsonify({'success': False, 'error': str(e), 'bound': e.bound,
                        'diagnostics': {k: repr(v) for k, v in e.diagnostics.items()}}), 422
    return jsonify({'success': False, 'error': 'Evaluation failed'}), 500


@app.route('/api/health', methods=['GET'])
def api_health():
    """Liveness check"""
    return jsonify({'success': True, 'status': 'ok'})


@app.route('/api/cone', methods=['POST'])
def api_cone():
    """Cone energy; theta = pi selects the on-axis formula"""
    try:
        data = request.get_json(silent=True) or {}
        cfg = ConeConfig(theta0=read_angle(data, 'theta0'), theta=read_angle(data, 'theta'),
                         r=float(data.get('r', 1.0)))
        result = cone_service.cone_energy(cfg, read_spec(data))
        payload = result.to_dict()
        payload['u_hat_scaled'] = result.u_hat * math.sin(cfg.theta - cfg.theta0) ** 4
        return jsonify({'success': True, 'result': payload})

    except Exception as e:
        logger.error(f"Cone request error: {str(e)}")
        return error_response(e)


@app.route('/api/wedge', methods=['POST'])
def api_wedge():
    """Wedge energy in closed form and from the lambda-integral"""
    try:
        data = request.get_json(silent=True) or {}
        cfg = WedgeConfig(theta0=read_angle(data, 'theta0'), theta=read_angle(data, 'theta'),
                          r=float(data.get('r', 1.0)))
        spec = read_spec(data)
        closed = wedge_service.wedge_energy_closed(cfg)
        integral = wedge_service.wedge_energy_integral(cfg, spec)
        payload = {
            'p': cfg.p,
            'closed': closed,
            'integral': integral.value,
            'integral_err': integral.err,
            'difference': integral.value - closed,
        }

        theta_ref = read_angle(data, 'ref_theta', required=False)
        if theta_ref is not None:
            relative = wedge_service.wedge_energy_relative(cfg, theta_ref, spec)
            reference = wedge_service.wedge_energy_closed(WedgeConfig(theta0=cfg.theta0, theta=theta_ref))
            payload.update({
                'relative': relative.value,
                'relative_err': relative.err,
                'closed_difference': closed - reference,
            })
        return jsonify({'success': True, 'result': payload})

    except Exception as e:
        logger.error(f"Wedge request error: {str(e)}")
        return error_response(e)


@app.route('/api/thermal', methods=['POST'])
def api_thermal():
    """Finite-temperature cone energy"""
    try:
        data = request.get_json(silent=True) or {}
        cfg = ConeConfig(theta0=read_angle(data, 'theta0'), theta=read_angle(data, 'theta'),
                         r=float(data.get('r', 1.0)))
        if data.get('omega0') is not None:
            model = PolarizabilityModel(kind='single_oscillator', omega0=float(data['omega0']))
        else:
            model = PolarizabilityModel()
        th = ThermalConfig(tau=float(data.get('tau', 0.0)), model=model)
        result = thermal_service.thermal_energy(cfg, th, read_spec(data))
        return jsonify({'success': True, 'result': result.to_dict()})

    except Exception as e:
        logger.error(f"Thermal request error: {str(e)}")
        return error_response(e)


if __name__ == '__main__':
    port = int(os.environ.get('PORT', 8080))
    print("Starting Casimir-Polder API...")
    print(f"Server running on port: {port}")

    # Check if running in production (Render sets this)
    is_production = os.environ.get('RENDER') is not None
    if is_production:
        # Production: Don't run directly, gunicorn will handle it
        print("Production mode: Use 'gunicorn app:app' to start")
    else:
        # Development: Use Flask's development server
        app.run(debug=True, host='0.0.0.0', port=port)
