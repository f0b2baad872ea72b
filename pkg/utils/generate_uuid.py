import uuid


def generate_run_id(name: str):
    id = uuid.uuid1()
    return f'{name}_{id.hex[:12]}'
