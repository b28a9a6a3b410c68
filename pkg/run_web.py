#!/usr/bin/env python3
"""
Casimir-Polder API Launcher
Simple script to start the web API locally
"""

import os
import sys
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

def check_requirements():
    """Check if required dependencies are installed"""
    try:
        import flask
        import numba
        import scipy
        print("✓ Dependencies found")
        return True
    except ImportError as e:
        print(f"✗ Missing dependency: {e}")
        print("\nPlease install requirements:")
        print("pip install -r requirements.txt")
        return False

def check_tolerances():
    """Check that tolerance overrides in the environment parse"""
    for key in ("CASIMIR_REL_TOL", "CASIMIR_ABS_TOL"):
        value = os.getenv(key)
        if value is None:
            continue
        try:
            if float(value) <= 0:
                raise ValueError
        except ValueError:
            print(f"✗ {key}={value!r} is not a positive number")
            return False
    print("✓ Tolerance settings valid")
    return True

def main():
    """Main launcher function"""
    print("Casimir-Polder Energy API")
    print("=" * 50)

    if not check_requirements():
        sys.exit(1)

    if not check_tolerances():
        sys.exit(1)

    port = int(os.getenv("PORT", 3000))
    print("\nStarting web API...")
    print(f"Health check: http://localhost:{port}/api/health")
    print("Press Ctrl+C to stop the server")
    print("=" * 50 + "\n")

    # Import and run the Flask app
    try:
        from app import app
        app.run(debug=True, host='0.0.0.0', port=port)
    except KeyboardInterrupt:
        print("\n\nServer stopped.")
    except Exception as e:
        print(f"\n❌ Error starting app: {e}")
        sys.exit(1)

if __name__ == "__main__":
    main()
