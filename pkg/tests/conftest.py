import trace_audit

# Installed before test modules import the library so that their own
# ``from binexperts.inference import lmp_infer`` binds the audited version.
trace_audit.install()


def pytest_collection_modifyitems(items):
    # Acceptance runs last so its trace audit sees every other suite.
    items.sort(key=lambda item: item.module.__name__ == "test_acceptance")


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(test_acceptance.RESULTS):
        terminalreporter.write_line(test_acceptance.RESULTS[n])
