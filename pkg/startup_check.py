"""
Startup check script to verify the conic solver stack.
"""
import sys

from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def check_solvers():
    """Check that cvxpy sees the configured solver or its fallback."""
    import cvxpy as cp
    from app.core.config import settings

    installed = cp.installed_solvers()
    print(f"🔍 cvxpy {cp.__version__}, solvers: {', '.join(installed)}")
    ok = False
    for name in (settings.solver, settings.fallback_solver):
        if name in installed:
            print(f"✅ {name} available")
            ok = True
        else:
            print(f"❌ {name} not installed")
    if not ok:
        print("💡 Install clarabel or scs, or set JMSTEER_SOLVER in your .env file")
    return ok


def check_trivial_problem():
    """Solve X = 1 over 2x2 PSD matrices and verify the certificate."""
    try:
        from app.models.conic import Block, ConicProblem, Equality, Term
        from app.services import conic
        from app.services.hermitian import identity

        problem = ConicProblem(
            blocks=(Block("X", 2),),
            equalities=(Equality("unit", identity(2), (Term("X"),)),),
            name="startup",
        )
        certificate = conic.solve(problem)
        report = conic.verify(problem, certificate)
        if certificate.feasible and report.passed:
            print(f"✅ Trivial SDP solved and verified (residual {report.max_residual:.1e})")
            return True
        print(f"❌ Trivial SDP did not verify: {report.notes}")
        return False
    except Exception as e:
        print(f"❌ Trivial SDP failed: {e}")
        return False


def main():
    """Run all startup checks."""
    print("🚀 Joint Measurability & Steering Startup Check")
    print("=" * 40)

    solvers_ok = check_solvers()
    problem_ok = solvers_ok and check_trivial_problem()

    print("\n" + "=" * 40)

    if solvers_ok and problem_ok:
        print("🎉 All checks passed! You can start the application.")
        print("💡 Run: python run.py")
        return 0
    print("⚠️  Some checks failed. Please fix the issues before starting.")
    return 1


if __name__ == "__main__":
    sys.exit(main())
