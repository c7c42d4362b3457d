from experiments.cli import PipelineCommand


class Command(PipelineCommand):
    help = 'Train the active-set classifier on the training split of a dataset'
    command = 'train'

    def add_stage_arguments(self, parser):
        parser.add_argument('--dataset', required=True, help='Dataset written by generate')
        parser.add_argument('--epochs', type=int, help='Override nn.epochs')
        parser.add_argument(
            '--strict',
            action='store_true',
            help='Fail (exit 3) instead of warning when the training data holds a single class',
        )

    def overrides(self, options):
        overrides = super().overrides(options)
        overrides['nn'] = {'epochs': options.get('epochs')}
        return overrides

    def stage_inputs(self, options):
        return {'dataset_path': options['dataset'], 'strict': options.get('strict', False)}

    def describe(self, outcome):
        summary = outcome.summary
        return (
            f"Trained on {summary['n_train']} samples ({summary['classes']} classes): "
            f"loss {summary['final_loss']:.6f}, train top-1 {summary['train_top1']:.4f}"
        )
