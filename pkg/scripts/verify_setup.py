"""
Setup Verification Script
Checks that the interpreter, packages and configuration are usable.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))


def check_python_version():
    """Verify Python 3.11+ is installed."""
    version = sys.version_info
    print(f"Python Version: {version.major}.{version.minor}.{version.micro}")

    if version.major == 3 and version.minor >= 11:
        print("✓ Python version OK")
        return True
    else:
        print("✗ Python 3.11+ required")
        return False


def check_dependencies():
    """Check if key Python packages are installed."""
    packages = [
        "numpy",
        "scipy",
        "pandas",
        "pydantic",
        "pydantic_settings",
        "dotenv",
        "structlog",
    ]

    print("\nChecking Python Dependencies:")
    all_ok = True

    for package in packages:
        try:
            module = __import__(package)
            print(f"  ✓ {package} {getattr(module, '__version__', '')}".rstrip())
        except ImportError:
            print(f"  ✗ {package} not installed")
            all_ok = False

    return all_ok


def check_settings():
    """Load settings from the environment and .env."""
    try:
        from backend.config import settings
    except Exception as e:
        print(f"✗ Settings failed to load: {e}")
        return False

    print(f"✓ Settings loaded (scheme={settings.QUAD_SCHEME}, tol={settings.FIXED_POINT_TOL})")
    return True


def check_quadrature():
    """Gauss-Hermite rule of order 20 integrates x² against N(0, 1)."""
    try:
        from backend.quad.schemes import gh_nodes

        nodes, weights = gh_nodes(20)
        second_moment = float(weights @ nodes**2)
    except Exception as e:
        print(f"✗ Quadrature check failed: {e}")
        return False

    if abs(second_moment - 1.0) < 1e-10:
        print("✓ Gauss-Hermite nodes OK")
        return True
    print(f"✗ Gauss-Hermite second moment {second_moment} != 1")
    return False


def check_env_file():
    """Check if .env file exists."""
    env_path = Path(".env")

    if env_path.exists():
        print("✓ .env file exists")
    else:
        print("- .env file not found (defaults in use)")
        print("  Copy .env.example to .env to override them")
    return True


def main():
    """Run all verification checks."""
    print("=" * 60)
    print("BLV Setup Verification")
    print("=" * 60)
    print()

    checks = [
        ("Python Version", check_python_version),
        ("Dependencies", check_dependencies),
        ("Settings", check_settings),
        ("Quadrature", check_quadrature),
        ("Environment File", check_env_file),
    ]

    results = []

    for name, check_func in checks:
        print(f"\n--- {name} ---")
        result = check_func()
        results.append((name, result))

    print("\n" + "=" * 60)
    print("Summary:")
    print("=" * 60)

    all_passed = True
    for name, result in results:
        status = "✓ PASS" if result else "✗ FAIL"
        print(f"{status}: {name}")
        if not result:
            all_passed = False

    print("\n" + "=" * 60)

    if all_passed:
        print("✓ All checks passed! Try: python demo_bs_experiment.py")
        print("=" * 60)
        return 0
    else:
        print("✗ Some checks failed. Please fix the issues above.")
        print("=" * 60)
        return 1


if __name__ == "__main__":
    sys.exit(main())
