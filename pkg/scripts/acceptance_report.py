"""Run the acceptance suite and print only its PASS/FAIL lines and diagnostics.

    python3 scripts/acceptance_report.py
"""

from pathlib import Path
import subprocess
import sys

ROOT = Path(__file__).resolve().parent.parent


def main():
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-s", str(ROOT / "tests" / "test_acceptance.py")],
                          capture_output=True, text=True, cwd=ROOT)
    lines = [ln for ln in proc.stdout.splitlines() if ln.startswith(("PASS", "FAIL", "    "))]
    print("\n".join(ln for ln in lines if not ln.startswith("    ") or not ln.strip().startswith(("def ", "assert"))))
    passed = sum(ln.startswith("PASS") for ln in lines)
    failed = sum(ln.startswith("FAIL") for ln in lines)
    print(f"\n{passed} passed, {failed} failed")
    return 0 if failed == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
