from hypothesis import HealthCheck, settings

settings.register_profile(
    "grasslab", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("grasslab")


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when == "call" and "test_acceptance" in rep.nodeid:
                lines += [ln for ln in rep.capstdout.splitlines() if ln.startswith("criterion")]
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in sorted(lines):
            terminalreporter.write_line(ln)
