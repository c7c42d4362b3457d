from experiments.cli import PipelineCommand


class Command(PipelineCommand):
    help = 'Retrain across training-set sizes and network depths'
    command = 'sweep'

    def add_stage_arguments(self, parser):
        parser.add_argument('--dataset', required=True, help='Dataset written by generate')
        parser.add_argument('--sizes', type=int, nargs='*', help='Training-set sizes for the learning curve')
        parser.add_argument('--depths', type=int, nargs='*', help='Hidden-layer counts for the depth table')

    def overrides(self, options):
        overrides = super().overrides(options)
        overrides['sweep'] = {'sizes': options.get('sizes'), 'depths': options.get('depths')}
        return overrides

    def stage_inputs(self, options):
        return {'dataset_path': options['dataset']}

    def describe(self, outcome):
        cells = len(outcome.summary.get('learning_curve', [])) + len(outcome.summary.get('accuracy_by_depth', []))
        return f"{cells} sweep cells"
