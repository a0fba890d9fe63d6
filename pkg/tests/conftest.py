import os
import sys

sys.path.insert(0, os.path.dirname(__file__))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: longer-running statistical checks")
    config.addinivalue_line("markers", "acceptance: numbered acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(module.ACCEPTANCE, key=lambda n: int(n[2:])):
        crit = module.ACCEPTANCE[name]
        status = "FAIL" if crit.failures else "PASS"
        terminalreporter.write_line(f"{name} {status}: {crit.summary()}")
