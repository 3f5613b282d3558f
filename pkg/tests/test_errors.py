"""Tests for the exception hierarchy."""

from errors import (AnnulusCorrectionError, ConcordanceError, DomainError, FieldError, FlowError, InputError,
                    InversionError, MassBalanceError, PipelineError, PoissonConvergenceError,
                    PreconditionError, SolverError)


def test_validation_errors_are_value_errors():
    for cls in (FieldError, DomainError, PreconditionError, InputError):
        assert issubclass(cls, ValueError)


def test_numerical_errors_are_runtime_errors():
    for cls in (SolverError, FlowError, InversionError, PipelineError):
        assert issubclass(cls, RuntimeError)
    assert issubclass(PoissonConvergenceError, SolverError)
    assert issubclass(AnnulusCorrectionError, SolverError)
    assert issubclass(MassBalanceError, PipelineError)
    assert issubclass(ConcordanceError, PipelineError)


def test_solver_error_keeps_history():
    err = AnnulusCorrectionError("annulus correction failed", [1.0, 0.5, 0.6])
    assert err.history == [1.0, 0.5, 0.6]
    assert "annulus correction failed" in str(err)
    assert "6.000e-01" in str(err)


def test_inversion_error_names_node():
    err = InversionError("Inversion did not converge", node=(3, 4), last_iterate=(0.1, 0.2))
    assert err.node == (3, 4)
    assert err.last_iterate == (0.1, 0.2)
    assert "(3, 4)" in str(err)


def test_pipeline_errors_carry_stage():
    err = PipelineError("boom", stage="stage_a")
    assert err.stage == "stage_a"
    assert str(err) == "[stage_a] boom"

    mass = MassBalanceError()
    assert mass.stage == "normalize"
    assert "unequal total volume" in str(mass)

    concord = ConcordanceError()
    assert concord.stage == "stage_b"
    assert "concordance failed" in str(concord)
    assert ConcordanceError("x", stage="compose").stage == "compose"


def test_input_error_location():
    err = InputError("Unparsable number 'x'", path="f.csv", line=3, column=2)
    assert str(err) == "f.csv:3:2: Unparsable number 'x'"
    assert (err.path, err.line, err.column) == ("f.csv", 3, 2)
    assert str(InputError("bad")) == "bad"
