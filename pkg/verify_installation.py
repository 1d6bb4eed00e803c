#!/usr/bin/env python3
"""
Verification script for the uavport installation
Imports every subpackage, loads the bundled scenarios and runs a short simulation
"""

import sys


def print_header(text):
    print("\n" + "=" * 60)
    print(f"  {text}")
    print("=" * 60)


def print_check(name, passed):
    status = "✓ PASS" if passed else "✗ FAIL"
    color = "\033[92m" if passed else "\033[91m"
    reset = "\033[0m"
    print(f"{color}{status}{reset} - {name}")


def main():
    print_header("uavport Installation Verification")

    all_passed = True

    # Check 1: Python version
    print("\nChecking Python version...")
    py_version = sys.version_info
    py_ok = py_version.major == 3 and py_version.minor >= 9
    print_check(f"Python {py_version.major}.{py_version.minor}.{py_version.micro}", py_ok)
    all_passed = all_passed and py_ok

    # Check 2: Import modules
    print("\nChecking module imports...")
    try:
        from uavport.domain import ScenarioConfig, bundled_scenario, load_scenario
        print_check("Domain module", True)

        from uavport.fsm import legal_transitions
        print_check("FSM module", True)

        from uavport.messaging import MasterNode  # noqa: F401
        print_check("Messaging module", True)

        from uavport.scheduling import AirScheduler, GroundScheduler  # noqa: F401
        print_check("Scheduling module", True)

        from uavport.sim import run
        print_check("Simulation module", True)

        from uavport.orders import compute_metrics
        print_check("Orders module", True)

        from uavport.verify import TraceVerifier, format_report
        print_check("Verifier module", True)

        from uavport.cli import main as cli_main  # noqa: F401
        print_check("CLI module", True)

    except ImportError as e:
        print_check(f"Module import: {e}", False)
        print("\n⚠ Run: pip install -e .")
        return 1

    # Check 3: Bundled scenarios and machines
    print("\nChecking bundled scenarios...")
    try:
        for name in ('one_cycle', 'two_cycle', 'three_cycle'):
            config = load_scenario(bundled_scenario(name))
            print_check(f"{name}: {config.n_uavs} UAVs, {config.n_agvs} AGVs", True)
        edges = legal_transitions()
        print_check(f"FSM tables: {len(edges['uav'])} UAV and {len(edges['agv'])} AGV edges",
                    len(edges['uav']) == 9 and len(edges['agv']) == 7)
    except Exception as e:
        print_check(f"Scenarios: {e}", False)
        return 1

    # Check 4: Smoke run
    print("\nRunning one simulated minute...")
    try:
        engine = run(ScenarioConfig.default('two-cycle', n_uavs=4, duration_s=60.0, seed=1))
        print_check(f"Simulation reached tick {engine.tick}", engine.tick == 600)

        result = TraceVerifier().analyze(engine.trace)
        print_check("Trace verification", result['passed'])
        if not result['passed']:
            print(format_report(result))
            all_passed = False

        report = compute_metrics(engine.trace)
        print_check(f"Metrics (AGV busy {report.agv_busy:.2f})", 0.0 <= report.agv_busy <= 1.0)
    except Exception as e:
        print_check(f"Simulation: {e}", False)
        return 1

    # Final result
    print_header("Verification Results")
    if all_passed:
        print("\n✓ All checks passed! uavport is ready to use.")
        print("\nNext steps:")
        print("  1. One run:        uavport run --scheme two-cycle --uavs 8 --seed 7")
        print("  2. Audit it:       uavport verify results/trace.jsonl")
        print("  3. Full sweep:     ./run_experiments.sh")
        print("  4. Run tests:      pytest")
        return 0
    else:
        print("\n✗ Some checks failed. Please review the output above.")
        return 1


if __name__ == "__main__":
    sys.exit(main())
