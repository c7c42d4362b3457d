from experiments.cli import PipelineCommand


class Command(PipelineCommand):
    help = 'Score a trained classifier and its policies on the held-out split'
    command = 'evaluate'

    def add_stage_arguments(self, parser):
        parser.add_argument('--model', required=True, help='Model file written by train')
        parser.add_argument('--dataset', required=True, help='Dataset the model was trained on')
        parser.add_argument(
            '--test-dataset',
            help='Separately generated dataset to score instead of the held-out split',
        )
        parser.add_argument('--k', type=int, nargs='+', dest='K_list', help='Top-K values to report')
        parser.add_argument(
            '--fallback-lp',
            action='store_true',
            default=None,
            help='Solve the LP when no predicted active set is feasible',
        )

    def overrides(self, options):
        overrides = super().overrides(options)
        overrides['eval'] = {'K_list': options.get('K_list'), 'fallback_lp': options.get('fallback_lp')}
        return overrides

    def stage_inputs(self, options):
        return {
            'model_path': options['model'],
            'dataset_path': options['dataset'],
            'test_dataset_path': options.get('test_dataset'),
        }

    def describe(self, outcome):
        accuracy = outcome.summary['accuracy']
        listed = ', '.join(f"eta_{K} = {eta:.4f}" for K, eta in accuracy.items())
        return f"{outcome.summary['n_test']} test samples: {listed}"
