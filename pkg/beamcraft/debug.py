import logging

class colors:
    GREEN = '\033[92m'
    YELLOW = '\033[93m'
    RED = '\033[91m'
    CYAN = '\033[96m'
    ENDC = '\033[0m'

LEVELS = {'quiet': logging.WARNING, 'normal': logging.INFO, 'verbose': logging.DEBUG}

class Logger:

    def __init__(self, name='beamcraft'):
        self.name = name
        self.loggers = {kind: self.make_logger(kind) for kind in ('message', 'error', 'warning', 'value')}

    def make_logger(self, type):
        logger = logging.getLogger(f'{self.name}.{type}')
        logger.propagate = False
        if logger.handlers:
            return logger
        handler = logging.StreamHandler()
        logger.setLevel(logging.INFO)

        if type == 'value':
            formatter = logging.Formatter('     %(message)-30s %(value)s')
        else:
            formatter = logging.Formatter('%(level)s %(message)s')
        if type == 'error':
            logger.setLevel(logging.ERROR)
        elif type == 'warning':
            logger.setLevel(logging.WARNING)
        handler.setFormatter(formatter)
        logger.addHandler(handler)
        return logger

    def get_logger(self, type):
        return self.loggers[type]

    def set_level(self, level):
        if level not in LEVELS:
            raise ValueError(f'Unknown log level: {level}')
        for kind in ('message', 'value'):
            self.loggers[kind].setLevel(LEVELS[level])

    def parse_message(self, message, type, any=None):
        # spans wrapped in <> are highlighted according to the message type
        type = type.upper()
        message = str(message)
        if type == 'INFO':
            message = message.replace('<', colors.CYAN)
            level = f'[ {colors.GREEN}INFO{colors.ENDC} ]'
        elif type == 'STAT':
            message = message.replace('<', colors.CYAN)
            message = ''.join([f'{colors.CYAN}{x}{colors.ENDC}' if x.isdigit() else x for x in message])
            level = f'[ {colors.CYAN}STAT{colors.ENDC} ]'
        elif type == 'WARNING':
            message = message.replace('<', colors.YELLOW)
            level = f'[ {colors.YELLOW}WARNING{colors.ENDC} ]'
        elif type == 'ERROR':
            message = colors.RED + message + colors.ENDC
            message = message.replace('<', f'{colors.ENDC}{colors.YELLOW}')
            level = f'[ {colors.RED}ERROR{colors.ENDC} ]'
        elif type == 'VALUE':
            message = message.replace('<', f'{colors.ENDC}{colors.YELLOW}')
            level = ''
        elif type == 'DONE':
            message = message.replace('<', colors.CYAN)
            level = f'[ {colors.GREEN}DONE{colors.ENDC} ]'
        elif type == 'ANY':
            if any is None:
                raise ValueError('No value provided for ANY type.')
            message = message.replace('<', colors.CYAN)
            level = f'[ {colors.GREEN}{any.upper()}{colors.ENDC} ]'
        else:
            raise ValueError(f'Unknown message type: {type}')

        message = message.replace('>', colors.ENDC)
        return {'level': level}, message

logger = Logger()

class Debug:

    @staticmethod
    def set_level(level):
        logger.set_level(level)

    @staticmethod
    def log_info(message):
        level, message = logger.parse_message(message, type='info')
        logger.get_logger('message').info(message, extra=level)

    @staticmethod
    def log_debug(message):
        level, message = logger.parse_message(message, type='any', any='debug')
        logger.get_logger('message').debug(message, extra=level)

    @staticmethod
    def log_error(message):
        level, message = logger.parse_message(message, type='error')
        logger.get_logger('error').error(message, extra=level)

    @staticmethod
    def log_warning(message):
        level, message = logger.parse_message(message, type='warning')
        logger.get_logger('warning').warning(message, extra=level)

    @staticmethod
    def log_stat(message):
        level, message = logger.parse_message(message, type='stat')
        logger.get_logger('message').info(message, extra=level)

    @staticmethod
    def log_value(message):
        _, message = logger.parse_message(message, type='value')
        name, _, value = message.partition(':')
        message = colors.CYAN + name + ':' + colors.ENDC
        logger.get_logger('value').info(message, extra={'value': value})

    @staticmethod
    def log_done(message):
        level, message = logger.parse_message(message, type='done')
        logger.get_logger('message').info(message, extra=level)

    @staticmethod
    def log_any(message, any):
        level, message = logger.parse_message(message, type='any', any=any)
        logger.get_logger('message').info(message, extra=level)

