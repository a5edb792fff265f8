import logging
import traceback
from abc import abstractmethod
from typing import Any, Dict, Optional

from omegaconf import DictConfig

from oracle_kd.data.data_module import DataModule
from oracle_kd.errors import OracleKDError
from oracle_kd.utils import limit_threads

logger = logging.getLogger(__name__)


class Base:
    def __init__(self, cfg: DictConfig, data_path: Optional[str] = None):
        self.cfg = cfg
        self.data_path = data_path
        self.seed: int = cfg.seed
        self.datamodule: Optional[DataModule] = None

    def alert(self, title: str, text: str = '') -> None:
        logger.info(title)
        if text:
            logger.info(text)

    def prepare_data(self) -> None:
        logger.info('Setting up data')
        self.datamodule = DataModule(self.cfg, path=self.data_path)
        self.datamodule.prepare_data()
        self.datamodule.setup()

    def setup_model(self) -> None:
        """Build or load the models the run needs."""

    def setup(self) -> None:
        self.prepare_data()
        self.setup_model()

    @abstractmethod
    def run_training(self) -> Dict[str, Any]:
        """Run the experiment and return its summary"""

    def execute(self) -> Dict[str, Any]:
        with limit_threads():
            try:
                self.setup()
                return self.run_training()

            except OracleKDError as e:
                self.alert(title='Run has failed!', text=f'{type(e).__name__}: {e}')
                raise

            except Exception:
                self.alert(title='Run has crashed!')
                logger.exception(traceback.format_exc())
                raise
