from rabi.errors import VerificationFailed
from rabi.models import SweepConfig
from rabi.verify import run_suites

NAME = "verify"
HELP = "self-check suites (parity, stark, boundaries, tricritical)"


def run(cfg: SweepConfig) -> int:
    reports = run_suites([cfg.suite] if cfg.suite else None)
    failed = []
    for report in reports:
        for check in report.checks:
            mark = "ok  " if check.passed else "FAIL"
            print(f"[{mark}] {report.suite}: {check.name} {check.detail}")
        if not report.passed:
            failed.append(report.suite)
    if failed:
        raise VerificationFailed(f"failed suites: {', '.join(failed)}")
    return 0
