from experiments.cli import PipelineCommand


class Command(PipelineCommand):
    help = 'Sample forecast errors, label them with DC-OPF active sets and write the dataset'
    command = 'generate'

    def add_stage_arguments(self, parser):
        parser.add_argument('--n-samples', type=int, help='Number of draws (omit to sample until the stopping rule fires)')
        parser.add_argument('--sigma-frac', type=float, help='Forecast error std as a fraction of each load')

    def overrides(self, options):
        overrides = super().overrides(options)
        overrides['n_samples'] = options.get('n_samples')
        overrides['sigma_frac'] = options.get('sigma_frac')
        return overrides

    def describe(self, outcome):
        summary = outcome.summary
        return (
            f"{summary['case']}: {summary['n_samples']} samples, {summary['active_sets']} active sets, "
            f"{summary['n_infeasible']} infeasible draws"
        )
