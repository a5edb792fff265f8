from oracle_kd.models.base import MODEL_KINDS, TEACHER_KINDS, CTCModel, ModelOutput
from oracle_kd.models.checkpoint import load_checkpoint, save_checkpoint
from oracle_kd.models.factory import build_model, load_model, save_model
from oracle_kd.models.oracle_teacher import OracleTeacher
from oracle_kd.models.parameter_store import ParameterStore
from oracle_kd.models.student import StudentCTC
