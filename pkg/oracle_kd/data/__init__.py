from oracle_kd.data.file_handler import read_dataset, write_dataset
from oracle_kd.data.task import Sample, TaskSpec, class_separation, gen_sample, generate_dataset, prototypes
