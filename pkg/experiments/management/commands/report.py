from experiments.cli import PipelineCommand


class Command(PipelineCommand):
    help = 'Write the case inventory, and the fixed-status and frequency tables of a dataset'
    command = 'report'

    def add_stage_arguments(self, parser):
        parser.add_argument('--dataset', help='Dataset written by generate')

    def stage_inputs(self, options):
        return {'dataset_path': options.get('dataset')}

    def describe(self, outcome):
        inventory = outcome.summary['inventory']
        return (
            f"{inventory['case']}: {inventory['buses']} buses, {inventory['generators']} generators, "
            f"{inventory['branches']} branches"
        )
