from django.core.management.base import CommandError

from cli.base import ExperimentCommand
from cli.selftest import run_invariant_suite

SELFTEST_FAILURE = 1


class Command(ExperimentCommand):
    help = 'Run the fast invariant suite; exits 1 naming every failed invariant.'

    def run(self, cfg):
        results = run_invariant_suite()
        for result in results:
            if result.passed:
                self.stdout.write(self.style.SUCCESS(f'PASS {result.name}') + f'  {result.detail}')
            else:
                self.stdout.write(self.style.ERROR(f'FAIL {result.name}') + f'  {result.detail}')

        failed = [result.name for result in results if not result.passed]
        if failed:
            raise CommandError(f'invariants failed: {", ".join(failed)}', returncode=SELFTEST_FAILURE)
        self.stdout.write(self.style.SUCCESS(f'all {len(results)} invariants hold'))
