from oracle_kd.experiment.base import Base
from oracle_kd.experiment.experiment import DistillExperiment, EvalExperiment, SweepExperiment, TeacherExperiment
